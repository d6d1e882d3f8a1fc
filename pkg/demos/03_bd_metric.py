"""
Bjontegaard delta between two rate curves
=========================================

A BD value is the mean vertical gap between two cubic fits of a quality
metric against log10(bpp), taken over the rate interval both curves cover.
The metric values here are made up; in practice they come from an external
detector evaluated on the decoded frames.
"""

import numpy as np

from pgr.evaluation import RateCurve, bd_metric

bpp = np.array([4.0, 6.0, 9.0, 13.0, 18.0, 25.0])
anchor = RateCurve(tuple(bpp), tuple(40 + 8 * np.log10(bpp)))

# the same quality at 15% fewer bits moves the curve left
test = RateCurve(tuple(0.85 * bpp), anchor.metric)
print(f"BD metric, same quality at fewer bits: {bd_metric(anchor, test):+.4f}")

# a constant offset comes back exactly
shifted = RateCurve(anchor.bpp, tuple(m - 0.5 for m in anchor.metric))
print(f"BD metric, 0.5 lower everywhere:       {bd_metric(anchor, shifted):+.4f}")

# swapping the curves flips the sign
print(f"swapped:                               {bd_metric(shifted, anchor):+.4f}")
