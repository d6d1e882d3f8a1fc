"""Simplified octree geometry codec (quantize, dedupe, occupancy, range coding).

Structurally modelled on geometry-based point cloud coding but not
bit-compatible with any standard.
"""

from .bitstream import Bitstream, decode_frame, encode_frame, measure_bpp
from .octree import leaves_from_codes, occupancy_codes
from .quantize import (RATE_SCALES, CodecConfig, QuantizedCloud, dequantize,
                       morton_decode, morton_encode, quantize)
from .rangecoder import decode_bytes, encode_bytes

__all__ = [
    "Bitstream", "CodecConfig", "RATE_SCALES", "QuantizedCloud", "decode_bytes",
    "decode_frame", "dequantize", "encode_bytes", "encode_frame", "leaves_from_codes",
    "measure_bpp", "morton_decode", "morton_encode", "occupancy_codes", "quantize",
]
