"""Pillar-based ground removal: a removal pass followed by one restoration pass.

A pillar is dropped as ground when it is both flat (height spread at most
``delta_minmax``) and low (its floor sits less than ``delta_env`` above the
lowest floor within ``er``). A dropped pillar comes back when any retained
pillar lies within chessboard distance ``delta_res`` of it, where
``delta_res`` grows with horizontal range to compensate for sparsity.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import ContractError, ParseError, UnknownNameError, ValidationError
from .frame_io import PointCloud
from .grid import (GridSpec, PillarGrid, build_grid, cell_radius, check_resolution,
                   neighborhood_min_z_all)

STAGES = ("grid", "removal", "restoration", "mask")


@dataclass(frozen=True)
class RemovalConfig:
    """Thresholds in meters.

    ``restore_rules`` is a sequence of ``(max_range, delta_res)``: a pillar
    whose center lies at horizontal range ``r`` uses the first rule with
    ``r < max_range``. The last ``max_range`` must be ``inf``.
    """

    resolution: float = 0.4
    delta_minmax: float = 0.4
    er: float = 1.8
    delta_env: float = 0.4
    restore_rules: tuple = ((30.0, 1.8), (math.inf, 5.4))
    restoration: bool = True

    def __post_init__(self):
        rules = tuple((float(r), float(d)) for r, d in self.restore_rules)
        object.__setattr__(self, "restore_rules", rules)
        for name in ("resolution", "delta_minmax", "er", "delta_env"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a positive length, got {v}")
        if not rules:
            raise ValidationError("at least one restore rule is required")
        ranges = [r for r, _ in rules]
        if any(b <= a for a, b in zip(ranges, ranges[1:])):
            raise ValidationError(f"restore rule ranges must increase strictly: {ranges}")
        if ranges[-1] != math.inf:
            raise ValidationError("the last restore rule must be unbounded (inf)")
        if any(not (d > 0 and math.isfinite(d)) for _, d in rules) or ranges[0] <= 0:
            raise ValidationError(f"restore rules must hold positive lengths: {rules}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["restore_rules"] = [[None if math.isinf(r) else r, dr]
                              for r, dr in self.restore_rules]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RemovalConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ParseError(f"unknown config fields {sorted(unknown)}")
        if "restore_rules" in d:
            d["restore_rules"] = tuple(
                (math.inf if r is None else r, dr) for r, dr in d["restore_rules"]
            )
        return cls(**d)


_C0 = RemovalConfig()
PRESETS = {
    "pgr-c0-kitti": _C0,
    "pgr-c0-waymo": replace(_C0, restore_rules=((30.0, 2.2), (math.inf, 5.4))),
    "pgr-c1": replace(_C0, er=1.4),
    "pgr-c2": replace(_C0, restore_rules=((30.0, 1.4), (math.inf, 5.4))),
    "pgr-c3": replace(_C0, delta_minmax=0.6),
    "pgr-c4": replace(_C0, er=0.6, delta_minmax=0.35,
                      restore_rules=((30.0, 1.6), (math.inf, 5.2))),
}


def named_config(name: str) -> RemovalConfig:
    """Resolve a preset; ``c0`` and ``pgr-c0`` are shorthands for ``pgr-c0-kitti``."""
    key = name.strip().lower()
    if not key.startswith("pgr-"):
        key = "pgr-" + key
    if key == "pgr-c0":
        key = "pgr-c0-kitti"
    try:
        return PRESETS[key]
    except KeyError:
        raise UnknownNameError(
            f"unknown config {name!r}; valid presets: {', '.join(PRESETS)}"
        ) from None


def load_config(path) -> RemovalConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    try:
        return RemovalConfig.from_dict(data)
    except TypeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def resolve_config(name_or_path: str) -> RemovalConfig:
    """Preset name, or a path to a JSON config file."""
    try:
        return named_config(name_or_path)
    except UnknownNameError:
        if name_or_path.endswith(".json"):
            return load_config(name_or_path)
        raise


@dataclass(frozen=True, eq=False)
class PillarDecision:
    """Per-pillar outcome: ``phi`` 1 = retained, ``restored`` 1 = brought back."""

    grid: PillarGrid
    phi: np.ndarray
    restored: np.ndarray
    stages: tuple = field(default=())

    @property
    def keep(self):
        return self.phi.astype(bool) | self.restored.astype(bool)

    def counts(self) -> dict:
        return {"pillars": len(self.grid), "retained": int(self.phi.sum()),
                "restored": int(self.restored.sum()),
                "removed": int(len(self.grid) - self.keep.sum())}


def removal_phase(grid: PillarGrid, cfg: RemovalConfig):
    """``phi`` per pillar: 0 when flat and low relative to its neighborhood, else 1."""
    check_resolution(grid, cfg.resolution)
    flat = (grid.z_max - grid.z_min) <= cfg.delta_minmax
    baseline = neighborhood_min_z_all(grid, cfg.er)
    low = (grid.z_min - baseline) < cfg.delta_env
    return (~(flat & low)).astype(np.uint8)


def restore_threshold(grid: PillarGrid, cfg: RemovalConfig):
    """``delta_res`` that applies to each pillar, chosen by its own range."""
    limits = np.array([r for r, _ in cfg.restore_rules])
    radii = np.array([d for _, d in cfg.restore_rules])
    return radii[np.searchsorted(limits, grid.range_2d, side="right")]


def restoration_phase(grid: PillarGrid, phi, cfg: RemovalConfig):
    """``restored`` per pillar: 1 for removed pillars near any retained one."""
    check_resolution(grid, cfg.resolution)
    phi = np.asarray(phi)
    if phi.shape != (len(grid),):
        raise ContractError(f"{phi.shape[0]} phi flags for {len(grid)} pillars")
    restored = np.zeros(len(grid), dtype=np.uint8)
    removed = phi == 0
    if not cfg.restoration or not removed.any() or removed.all():
        return restored
    limits = np.array([r for r, _ in cfg.restore_rules])
    rule = np.searchsorted(limits, grid.range_2d, side="right")
    retained = grid.dense(phi.astype(bool), False)
    for r, (_, delta_res) in enumerate(cfg.restore_rules):
        sel = removed & (rule == r)
        if not sel.any():
            continue
        # the chessboard metric makes a (2k+1)^2 window exact
        k = cell_radius(delta_res, grid.resolution)
        near = ndimage.maximum_filter(retained, size=2 * k + 1, mode="constant",
                                      cval=False) if k else retained
        restored[sel] = grid.gather(near)[sel]
    return restored


def apply_pgr(cloud: PointCloud, cfg: RemovalConfig = RemovalConfig(), profile=None):
    """Run removal then restoration once; return ``(keep_mask, decision)``.

    If ``profile`` is a dict, per-stage wall times (seconds) are added to it.
    """
    t0 = time.perf_counter()
    grid = build_grid(cloud, GridSpec(cfg.resolution))
    t1 = time.perf_counter()
    phi = removal_phase(grid, cfg)
    t2 = time.perf_counter()
    restored = restoration_phase(grid, phi, cfg)
    t3 = time.perf_counter()
    keep_pillar = (phi | restored).astype(bool)
    mask = keep_pillar[grid.point_pillar]
    t4 = time.perf_counter()
    if profile is not None:
        for stage, dt in zip(STAGES, (t1 - t0, t2 - t1, t3 - t2, t4 - t3)):
            profile[stage] = profile.get(stage, 0.0) + dt
    return mask, PillarDecision(grid, phi, restored, STAGES)


def filter_cloud(cloud: PointCloud, mask) -> PointCloud:
    """Points where ``mask`` is true, in their original order."""
    mask = np.asarray(mask)
    if mask.dtype != bool or mask.shape != (len(cloud),):
        raise ContractError(
            f"mask of shape {mask.shape} and dtype {mask.dtype} for {len(cloud)} points"
        )
    return cloud.select(mask)
