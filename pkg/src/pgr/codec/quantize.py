"""Geometry quantization and duplicate merging ahead of octree coding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, ValidationError
from ..frame_io import PointCloud

MAX_DEPTH = 21  # 3 * 21 bits of Morton code fit in an int64

# the six geometry scales of the reference rate sweep, coarse to fine
RATE_SCALES = (0.01, 0.012, 0.015, 0.022, 0.035, 0.063)


@dataclass(frozen=True)
class CodecConfig:
    """Quantization step control.

    Coordinates are first converted from meters to ``units_per_meter``
    input units (millimeters by default, the integer convention codecs
    usually work in), then multiplied by ``geometry_scale`` and rounded.
    One integer step is therefore ``1 / (geometry_scale * units_per_meter)``
    meters.
    """

    geometry_scale: float
    units_per_meter: float = 1000.0

    def __post_init__(self):
        s = self.geometry_scale
        if not (0 < s <= 1):
            raise ValidationError(f"geometry_scale must lie in (0, 1], got {s}")
        u = self.units_per_meter
        if not (u > 0 and math.isfinite(u)):
            raise ValidationError(f"units_per_meter must be > 0, got {u}")

    @property
    def factor(self) -> float:
        """Integer steps per meter."""
        return self.geometry_scale * self.units_per_meter


@dataclass(frozen=True, eq=False)
class QuantizedCloud:
    """Unique integer positions, in Morton (octree leaf) order.

    ``indices[k]`` is the input point whose attributes position ``k``
    carries; when several points share a cell the last one in input order
    wins.
    """

    coords: np.ndarray
    morton: np.ndarray
    indices: np.ndarray
    offset: np.ndarray
    config: CodecConfig

    def __len__(self):
        return len(self.coords)

    @property
    def depth(self) -> int:
        if len(self.coords) == 0:
            return 0
        return int(self.coords.max()).bit_length()


def morton_encode(coords):
    """Interleave bits as ``x y z`` triples, x most significant in each triple."""
    coords = np.asarray(coords, dtype=np.int64)
    key = np.zeros(len(coords), dtype=np.int64)
    if len(coords) == 0:
        return key
    top = int(coords.max()).bit_length()
    for b in range(top):
        key |= ((coords[:, 0] >> b) & 1) << (3 * b + 2)
        key |= ((coords[:, 1] >> b) & 1) << (3 * b + 1)
        key |= ((coords[:, 2] >> b) & 1) << (3 * b)
    return key


def morton_decode(key, depth: int):
    key = np.asarray(key, dtype=np.int64)
    coords = np.zeros((len(key), 3), dtype=np.int64)
    for b in range(depth):
        coords[:, 0] |= ((key >> (3 * b + 2)) & 1) << b
        coords[:, 1] |= ((key >> (3 * b + 1)) & 1) << b
        coords[:, 2] |= ((key >> (3 * b)) & 1) << b
    return coords


def quantize(cloud: PointCloud, cfg: CodecConfig) -> QuantizedCloud:
    """``round((xyz - min) * factor)`` with half-up rounding, then deduplicate."""
    xyz = np.asarray(cloud.xyz, dtype=np.float64)
    if len(xyz) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return QuantizedCloud(np.zeros((0, 3), dtype=np.int64), empty, empty,
                              np.zeros(3), cfg)
    offset = xyz.min(axis=0)
    q = np.floor((xyz - offset) * cfg.factor + 0.5).astype(np.int64)
    depth = int(q.max()).bit_length()
    if depth > MAX_DEPTH:
        raise DataError(
            f"quantized extent {int(q.max())} needs {depth} octree levels, "
            f"more than {MAX_DEPTH}; use a smaller geometry_scale"
        )
    key = morton_encode(q)
    n = len(key)
    uniq, first_rev = np.unique(key[::-1], return_index=True)
    survivors = n - 1 - first_rev
    return QuantizedCloud(q[survivors], uniq, survivors, offset, cfg)


def dequantize(coords, offset, cfg: CodecConfig):
    """Map integer positions back to meters."""
    return np.asarray(coords, dtype=np.float64) / cfg.factor + np.asarray(offset)
