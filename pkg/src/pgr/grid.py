"""Square-pillar partition of a frame in the horizontal plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from .errors import ContractError, DataError, QueryError, ValidationError
from .frame_io import PointCloud

# slack for converting a metric radius to whole cells, so that e.g.
# 1.6 m at 0.4 m resolution is exactly 4 cells despite float rounding
_CELL_EPS = 1e-9


def cell_radius(distance: float, resolution: float) -> int:
    """Largest integer ``k`` with ``k * resolution <= distance``."""
    return max(0, math.floor(distance / resolution + _CELL_EPS))


@dataclass(frozen=True)
class GridSpec:
    """Pillar side length and grid anchor, in meters.

    Leaving the origin as ``None`` anchors the grid at the frame's minimum
    x/y rounded down to a multiple of ``resolution``.
    """

    resolution: float = 0.4
    origin_x: float | None = None
    origin_y: float | None = None

    def __post_init__(self):
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValidationError(f"resolution must be > 0, got {self.resolution}")


@dataclass(frozen=True, eq=False)
class Pillar:
    cell: tuple
    point_indices: np.ndarray
    z_min: float
    z_max: float
    center_x: float
    center_y: float
    range_2d: float


class PillarGrid:
    """Non-empty pillars of one frame, stored column-wise.

    Pillars are numbered ``0..M-1`` in lexicographic ``(ix, iy)`` order.
    ``point_pillar[i]`` is the pillar number of point ``i``.
    """

    def __init__(self, spec, n_points, cells, z_min, z_max, counts, point_pillar,
                 dense_origin, dense_shape):
        self.spec = spec
        self.n_points = n_points
        self.cells = cells
        self.z_min = z_min
        self.z_max = z_max
        self.counts = counts
        self.point_pillar = point_pillar
        self._dense_origin = dense_origin  # cell index of dense[0, 0]
        self._dense_shape = dense_shape
        for a in (cells, z_min, z_max, counts, point_pillar):
            a.flags.writeable = False

    def __len__(self):
        return len(self.cells)

    @property
    def resolution(self) -> float:
        return self.spec.resolution

    @cached_property
    def centers(self):
        res = self.spec.resolution
        origin = np.array([self.spec.origin_x, self.spec.origin_y])
        return origin + (self.cells + 0.5) * res

    @cached_property
    def range_2d(self):
        c = self.centers
        return np.hypot(c[:, 0], c[:, 1])

    @cached_property
    def _members(self):
        order = np.argsort(self.point_pillar, kind="stable")
        starts = np.zeros(len(self) + 1, dtype=np.int64)
        np.cumsum(self.counts, out=starts[1:])
        return order, starts

    @cached_property
    def _dense_index(self):
        idx = np.full(self._dense_shape, -1, dtype=np.int64)
        if len(self):
            rel = self.cells - self._dense_origin
            idx[rel[:, 0], rel[:, 1]] = np.arange(len(self))
        return idx

    def dense(self, values, fill):
        """Scatter per-pillar ``values`` onto the dense cell raster."""
        out = np.full(self._dense_shape, fill, dtype=np.asarray(values).dtype)
        if len(self):
            rel = self.cells - self._dense_origin
            out[rel[:, 0], rel[:, 1]] = values
        return out

    def gather(self, raster):
        """Read a dense raster back at the pillar cells."""
        rel = self.cells - self._dense_origin
        return raster[rel[:, 0], rel[:, 1]]

    def index_of(self, cell) -> int:
        ix, iy = int(cell[0]), int(cell[1])
        rx, ry = ix - self._dense_origin[0], iy - self._dense_origin[1]
        if 0 <= rx < self._dense_shape[0] and 0 <= ry < self._dense_shape[1]:
            j = self._dense_index[rx, ry]
            if j >= 0:
                return int(j)
        raise QueryError(f"cell ({ix}, {iy}) holds no points")

    def __contains__(self, cell):
        try:
            self.index_of(cell)
        except QueryError:
            return False
        return True

    def pillar(self, key) -> Pillar:
        """Look up a pillar by number or by ``(ix, iy)`` cell."""
        j = int(key) if np.isscalar(key) else self.index_of(key)
        order, starts = self._members
        cx, cy = self.centers[j]
        return Pillar(
            cell=(int(self.cells[j, 0]), int(self.cells[j, 1])),
            point_indices=order[starts[j]:starts[j + 1]],
            z_min=float(self.z_min[j]),
            z_max=float(self.z_max[j]),
            center_x=float(cx),
            center_y=float(cy),
            range_2d=float(self.range_2d[j]),
        )

    def __iter__(self):
        return (self.pillar(j) for j in range(len(self)))

    @property
    def pillars(self) -> dict:
        return {p.cell: p for p in self}


def build_grid(cloud: PointCloud, spec: GridSpec = GridSpec()) -> PillarGrid:
    """Assign every point to the pillar ``floor((x - origin) / resolution)``."""
    res = spec.resolution
    n = len(cloud)
    if n and not np.isfinite(cloud.xyz).all():
        raise DataError("non-finite coordinates")
    x = np.asarray(cloud.xyz[:, 0], dtype=np.float64)
    y = np.asarray(cloud.xyz[:, 1], dtype=np.float64)
    if spec.origin_x is None or spec.origin_y is None:
        ix = np.floor(x / res).astype(np.int64)
        iy = np.floor(y / res).astype(np.int64)
        bx = int(ix.min()) if n else 0
        by = int(iy.min()) if n else 0
        ix -= bx
        iy -= by
        spec = GridSpec(res, bx * res, by * res)
    else:
        ix = np.floor((x - spec.origin_x) / res).astype(np.int64)
        iy = np.floor((y - spec.origin_y) / res).astype(np.int64)

    if n == 0:
        empty_i = np.zeros((0, 2), dtype=np.int64)
        empty_f = np.zeros(0)
        return PillarGrid(spec, 0, empty_i, empty_f, empty_f.copy(),
                          np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                          np.zeros(2, dtype=np.int64), (0, 0))

    lo = np.array([ix.min(), iy.min()])
    shape = (int(ix.max() - lo[0] + 1), int(iy.max() - lo[1] + 1))
    lin = (ix - lo[0]) * shape[1] + (iy - lo[1])
    ncell = shape[0] * shape[1]
    counts = np.bincount(lin, minlength=ncell)
    occupied = np.flatnonzero(counts)
    z = np.asarray(cloud.xyz[:, 2], dtype=np.float64)
    zmin = np.full(ncell, np.inf)
    zmax = np.full(ncell, -np.inf)
    np.minimum.at(zmin, lin, z)
    np.maximum.at(zmax, lin, z)
    renumber = np.full(ncell, -1, dtype=np.int64)
    renumber[occupied] = np.arange(len(occupied))
    cells = np.column_stack([occupied // shape[1] + lo[0], occupied % shape[1] + lo[1]])
    return PillarGrid(spec, n, cells, zmin[occupied], zmax[occupied], counts[occupied],
                      renumber[lin], lo, shape)


def neighborhood_min_z_all(grid: PillarGrid, radius: float):
    """Local ground baseline of every pillar.

    For each pillar, the minimum ``z_min`` over pillars within
    ``cell_radius(radius)`` cells on both axes, the pillar itself included.
    """
    if not radius > 0:
        raise ValidationError(f"radius must be > 0, got {radius}")
    if len(grid) == 0:
        return np.zeros(0)
    k = cell_radius(radius, grid.resolution)
    raster = grid.dense(grid.z_min, np.inf)
    if k > 0:
        raster = ndimage.minimum_filter(raster, size=2 * k + 1, mode="constant",
                                        cval=np.inf)
    return grid.gather(raster)


def neighborhood_min_z(grid: PillarGrid, cell, radius: float) -> float:
    """Lowest ``z_min`` in the square window of half-side ``radius`` around ``cell``."""
    if not radius > 0:
        raise ValidationError(f"radius must be > 0, got {radius}")
    grid.index_of(cell)
    k = cell_radius(radius, grid.resolution)
    rx = int(cell[0]) - grid._dense_origin[0]
    ry = int(cell[1]) - grid._dense_origin[1]
    idx = grid._dense_index[max(rx - k, 0):rx + k + 1, max(ry - k, 0):ry + k + 1]
    members = idx[idx >= 0]
    return float(grid.z_min[members].min())


def pillar_chessboard_distance(a: Pillar, b: Pillar) -> float:
    """L-infinity distance between two pillar centers."""
    return max(abs(a.center_x - b.center_x), abs(a.center_y - b.center_y))


def check_resolution(grid: PillarGrid, resolution: float) -> None:
    if not math.isclose(grid.resolution, resolution, rel_tol=1e-12):
        raise ContractError(
            f"grid built at {grid.resolution} m, config expects {resolution} m"
        )
