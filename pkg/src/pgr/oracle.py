"""Label-driven ground removal with box-guided restoration.

Given per-point ground labels and ground-truth boxes, drop every ground
point except those inside some box enlarged by ``1 + extension_factor``.
This is the upper-bound reference that the pillar method approximates
without labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError
from .frame_io import PointCloud, box_mask


@dataclass(frozen=True)
class OracleConfig:
    extension_factor: float = 0.0

    def __post_init__(self):
        ef = self.extension_factor
        if not (ef >= 0 and math.isfinite(ef)):
            raise ValidationError(f"extension factor must be >= 0, got {ef}")


def apply_oracle(cloud: PointCloud, ground, boxes, cfg: OracleConfig = OracleConfig()):
    """Keep mask: all non-ground points plus ground points in the scaled boxes."""
    ground = np.asarray(ground, dtype=bool)
    if ground.shape != (len(cloud),):
        raise ContractError(f"ground mask of length {ground.size} for {len(cloud)} points")
    keep = ~ground
    candidates = np.flatnonzero(ground)
    if candidates.size == 0:
        return keep
    xyz = cloud.xyz[candidates]
    inside = np.zeros(candidates.size, dtype=bool)
    for box in boxes:
        inside |= box_mask(xyz, box, 1.0 + cfg.extension_factor)
    keep[candidates[inside]] = True
    return keep
