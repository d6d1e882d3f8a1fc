"""Procedural LiDAR-like scenes for desk-scale experiments.

Ground returns are drawn with uniform range and azimuth, so their areal
density falls off as ``1/r`` like a spinning sensor. Objects are box
shells (four sides and the roof) sampled at a fixed areal density; ground
under an object's footprint is treated as occluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .frame_io import Box3D, ObjectClass, PointCloud, Scene, box_mask

GROUND_MODELS = ("flat", "slope", "curb")

# (length, width, height) means and jitter, roughly KITTI class statistics
CLASS_SIZES = {
    ObjectClass.CAR: ((3.9, 1.65, 1.55), (0.3, 0.1, 0.1)),
    ObjectClass.PEDESTRIAN: ((0.8, 0.6, 1.75), (0.1, 0.05, 0.1)),
    ObjectClass.CYCLIST: ((1.76, 0.6, 1.73), (0.1, 0.05, 0.08)),
}


@dataclass(frozen=True)
class ObjectProxy:
    box: Box3D
    density: float  # points per square meter of shell

    def __post_init__(self):
        if not self.density > 0:
            raise ValidationError(f"object density must be > 0, got {self.density}")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    """Parameters of one synthetic frame.

    ``ground`` is ``"flat"``, ``"slope"`` (z rises by ``gradient`` meters
    per meter along x and y) or ``"curb"`` (a step of ``curb_height`` for
    ``y >= curb_offset``).
    """

    ground: str = "flat"
    gradient: tuple = (0.0, 0.0)
    curb_height: float = 0.0
    curb_offset: float = 4.0
    objects: tuple = field(default_factory=tuple)
    noise_std: float = 0.02
    extent: float = 40.0
    ground_points: int = 20000
    min_range: float = 2.0
    sensor_height: float = 1.73

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "gradient", tuple(float(g) for g in self.gradient))
        if self.ground not in GROUND_MODELS:
            raise ValidationError(f"ground model must be one of {GROUND_MODELS}")
        if self.curb_height < 0:
            raise ValidationError("curb height must be >= 0")
        if not self.extent > 0:
            raise ValidationError("extent must be > 0")
        if self.noise_std < 0 or self.ground_points < 0:
            raise ValidationError("noise and ground point count must be >= 0")
        if not 0 <= self.min_range < self.extent:
            raise ValidationError("min_range must lie in [0, extent)")

    def ground_height(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = np.full(np.broadcast(x, y).shape, -self.sensor_height)
        if self.ground == "slope":
            z = z + self.gradient[0] * x + self.gradient[1] * y
        elif self.ground == "curb":
            z = z + np.where(y >= self.curb_offset, self.curb_height, 0.0)
        return z


def _sample_shell(box: Box3D, density: float, noise_std: float, rng):
    l, w, h = box.length, box.width, box.height
    # four sides and the roof; the bottom face is never seen by the sensor
    faces = np.array([l * h, l * h, w * h, w * h, l * w])
    n = int(round(density * faces.sum()))
    if n == 0:
        return np.zeros((0, 3))
    face = rng.choice(5, size=n, p=faces / faces.sum())
    u = rng.uniform(-0.5, 0.5, size=(n, 3))
    local = u * (l, w, h)
    local[face == 0, 1] = w / 2
    local[face == 1, 1] = -w / 2
    local[face == 2, 0] = l / 2
    local[face == 3, 0] = -l / 2
    local[face == 4, 2] = h / 2
    if noise_std > 0:
        local += rng.normal(0.0, noise_std, size=local.shape)
    inset = np.minimum(1e-3, 0.01 * box.dims)
    half = box.dims / 2 - inset
    local = np.clip(local, -half, half)
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    world = np.empty_like(local)
    world[:, 0] = c * local[:, 0] - s * local[:, 1] + box.center_x
    world[:, 1] = s * local[:, 0] + c * local[:, 1] + box.center_y
    world[:, 2] = local[:, 2] + box.center_z
    return world


def synthesize_scene(spec: SyntheticSceneSpec, seed: int) -> Scene:
    """Generate ``(cloud, ground_mask, boxes)``; a pure function of its inputs.

    Intensity is a deterministic pseudo-reflectance in [0, 1]. Points are
    stored as float32, like velodyne frames.
    """
    rng = np.random.default_rng(np.uint64(seed % 2**64))
    n = spec.ground_points
    r = rng.uniform(spec.min_range, spec.extent, size=n)
    theta = rng.uniform(-math.pi, math.pi, size=n)
    gx, gy = r * np.cos(theta), r * np.sin(theta)
    gz = spec.ground_height(gx, gy)
    ground = np.column_stack([gx, gy, gz])
    if spec.noise_std > 0:
        ground += rng.normal(0.0, spec.noise_std, size=ground.shape)

    boxes = [obj.box for obj in spec.objects]
    if boxes:
        occluded = np.zeros(n, dtype=bool)
        for b in boxes:
            foot = Box3D(b.center_x, b.center_y, 0.0, b.length, b.width, 1.0, b.yaw)
            flat = ground.copy()
            flat[:, 2] = 0.0
            occluded |= box_mask(flat, foot)
        ground = ground[~occluded]

    parts = [ground]
    for obj in spec.objects:
        parts.append(_sample_shell(obj.box, obj.density, spec.noise_std, rng))
    xyz = np.concatenate(parts).astype(np.float32)
    is_ground = np.zeros(len(xyz), dtype=bool)
    is_ground[: len(ground)] = True
    intensity = rng.uniform(0.0, 1.0, size=(len(xyz), 1)).astype(np.float32)
    intensity[~is_ground] = np.clip(intensity[~is_ground] + 0.3, 0, 1)
    cloud = PointCloud(xyz, intensity, frame_id=f"synth-{seed}")
    return Scene(cloud, is_ground, tuple(boxes))


def _place_objects(spec_ground: SyntheticSceneSpec, rng, n_objects, density, extent):
    placed = []
    classes = [ObjectClass.CAR, ObjectClass.PEDESTRIAN, ObjectClass.CYCLIST]
    tries = 0
    while len(placed) < n_objects and tries < 200 * n_objects:
        tries += 1
        cls = classes[rng.choice(3, p=[0.6, 0.25, 0.15])]
        mean, jitter = CLASS_SIZES[cls]
        l, w, h = (max(0.3, m + rng.uniform(-j, j)) for m, j in zip(mean, jitter))
        r = rng.uniform(5.0, extent - 4.0)
        theta = rng.uniform(-math.pi, math.pi)
        cx, cy = r * math.cos(theta), r * math.sin(theta)
        radius = 0.5 * math.hypot(l, w)
        if any(math.hypot(cx - p.box.center_x, cy - p.box.center_y)
               < radius + 0.5 * math.hypot(p.box.length, p.box.width) + 0.5
               for p in placed):
            continue
        cz = float(spec_ground.ground_height(cx, cy)) + h / 2
        yaw = rng.uniform(-math.pi, math.pi)
        # shell density falls with range like a real sensor's return density
        d = density * (10.0 / max(r, 10.0)) ** 2
        placed.append(ObjectProxy(Box3D(cx, cy, cz, l, w, h, yaw, cls), d))
    return tuple(placed)


def urban_scene_spec(seed: int, *, ground_points: int = 20000, extent: float = 40.0,
                     n_objects: tuple = (3, 8), object_density: float = 200.0,
                     noise_std: float = 0.02) -> SyntheticSceneSpec:
    """Draw a random street-like scene spec.

    Ground is flat, sloped up to 5 degrees, or has a curb up to 0.2 m;
    objects are cars, pedestrians and cyclists standing on the ground.
    """
    rng = np.random.default_rng(np.uint64(seed % 2**64) ^ np.uint64(0x9E3779B97F4A7C15))
    kind = GROUND_MODELS[rng.integers(3)]
    gradient = (0.0, 0.0)
    curb_height = 0.0
    curb_offset = 4.0
    if kind == "slope":
        slope = math.tan(math.radians(rng.uniform(0.5, 5.0)))
        phi = rng.uniform(-math.pi, math.pi)
        gradient = (slope * math.cos(phi), slope * math.sin(phi))
    elif kind == "curb":
        curb_height = rng.uniform(0.05, 0.2)
        curb_offset = rng.uniform(-8.0, 8.0)
    base = SyntheticSceneSpec(kind, gradient, curb_height, curb_offset,
                              noise_std=noise_std, extent=extent,
                              ground_points=ground_points)
    k = int(rng.integers(n_objects[0], n_objects[1] + 1))
    objects = _place_objects(base, rng, k, object_density, extent)
    return SyntheticSceneSpec(kind, gradient, curb_height, curb_offset, objects,
                              noise_std, extent, ground_points)


def urban_scene(seed: int, **kwargs) -> Scene:
    return synthesize_scene(urban_scene_spec(seed, **kwargs), seed)
