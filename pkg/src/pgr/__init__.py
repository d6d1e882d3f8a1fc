"""Obstacle-aware ground point removal for LiDAR frames, with rate evaluation."""

__version__ = "0.1.0"

from .errors import PGRError
from .frame_io import (Box3D, ObjectClass, PointCloud, Scene, load_boxes, load_frame_binary,
                       load_ground_mask, points_in_box, save_boxes, save_frame_binary,
                       save_ground_mask)
from .grid import (GridSpec, Pillar, PillarGrid, build_grid, neighborhood_min_z,
                   pillar_chessboard_distance)
from .oracle import OracleConfig, apply_oracle
from .removal import (PRESETS, PillarDecision, RemovalConfig, apply_pgr, filter_cloud,
                      named_config, removal_phase, restoration_phase)
from .synthetic import ObjectProxy, SyntheticSceneSpec, synthesize_scene, urban_scene

__all__ = [
    "Box3D", "GridSpec", "ObjectClass", "ObjectProxy", "OracleConfig", "PGRError", "PRESETS",
    "Pillar", "PillarDecision", "PillarGrid", "PointCloud", "RemovalConfig", "Scene",
    "SyntheticSceneSpec", "apply_oracle", "apply_pgr", "build_grid", "filter_cloud",
    "load_boxes", "load_frame_binary", "load_ground_mask", "named_config",
    "neighborhood_min_z", "pillar_chessboard_distance", "points_in_box", "removal_phase",
    "restoration_phase", "save_boxes", "save_frame_binary", "save_ground_mask",
    "synthesize_scene", "urban_scene",
]
