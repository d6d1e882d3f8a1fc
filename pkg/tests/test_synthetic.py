import math

import numpy as np
import pytest

from pgr import Box3D, ObjectProxy, SyntheticSceneSpec, synthesize_scene, urban_scene
from pgr.errors import ValidationError
from pgr.synthetic import urban_scene_spec
from reference import reference_in_box


def test_flat_ground_only_is_all_ground():
    cloud, ground, boxes = synthesize_scene(SyntheticSceneSpec(extent=10.0, ground_points=500), 3)
    assert len(cloud) == 500
    assert ground.all()
    assert boxes == ()


def test_deterministic_for_fixed_seed():
    spec = urban_scene_spec(11)
    a, b = synthesize_scene(spec, 11), synthesize_scene(spec, 11)
    assert a.cloud.bitwise_equal(b.cloud)
    assert np.array_equal(a.ground, b.ground)
    assert a.boxes == b.boxes
    assert not synthesize_scene(spec, 12).cloud.bitwise_equal(a.cloud)


def test_object_points_inside_their_box(car_scene):
    cloud, ground, (car,) = car_scene
    objects = np.flatnonzero(~ground)
    assert objects.size > 500
    # brute-force per point, independent rotation
    assert all(reference_in_box(cloud.xyz[i], car, 1.0) for i in objects)


def test_ground_under_footprint_is_occluded(car_scene):
    cloud, ground, (car,) = car_scene
    foot = Box3D(car.center_x, car.center_y, 0, car.length, car.width, 100.0, car.yaw)
    flat = cloud.xyz[ground].astype(np.float64)
    flat[:, 2] = 0
    assert not any(reference_in_box(p, foot, 1.0) for p in flat[::7])


def test_ground_models():
    slope = SyntheticSceneSpec("slope", gradient=(0.05, 0.0), noise_std=0.0, ground_points=2000)
    cloud, _, _ = synthesize_scene(slope, 1)
    z = cloud.z.astype(np.float64)
    assert np.allclose(z, -1.73 + 0.05 * cloud.x, atol=1e-5)
    curb = SyntheticSceneSpec("curb", curb_height=0.15, curb_offset=2.0, noise_std=0.0,
                              ground_points=2000)
    cloud, _, _ = synthesize_scene(curb, 1)
    hi = cloud.y >= 2.0
    assert np.allclose(cloud.z[hi], -1.73 + 0.15, atol=1e-5)
    assert np.allclose(cloud.z[~hi], -1.73, atol=1e-5)


def test_scene_parameters_validated():
    with pytest.raises(ValidationError):
        SyntheticSceneSpec("hills")
    with pytest.raises(ValidationError):
        SyntheticSceneSpec(curb_height=-0.1)
    with pytest.raises(ValidationError):
        SyntheticSceneSpec(extent=0)
    with pytest.raises(ValidationError):
        ObjectProxy(Box3D(0, 0, 0, 1, 1, 1), 0.0)


def test_urban_scenes_respect_ranges():
    for seed in range(30):
        spec = urban_scene_spec(seed)
        if spec.ground == "slope":
            assert math.hypot(*spec.gradient) <= math.tan(math.radians(5.0)) + 1e-12
        if spec.ground == "curb":
            assert 0 < spec.curb_height <= 0.2
        assert 1 <= len(spec.objects)
    scene = urban_scene(5)
    assert scene.cloud.xyz.dtype == np.float32
    assert scene.ground.sum() < len(scene.cloud)
