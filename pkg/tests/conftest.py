import numpy as np
import pytest

from pgr import Box3D, ObjectProxy, PointCloud, SyntheticSceneSpec, synthesize_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_cloud(rng):
    def make(n=100, arity=1, spread=20.0):
        xyz = rng.uniform(-spread, spread, size=(n, 3)).astype(np.float32)
        attrs = rng.uniform(0, 1, size=(n, arity)).astype(np.float32)
        return PointCloud(xyz, attrs, "rand")
    return make


@pytest.fixture(scope="session")
def car_scene():
    """Flat ground with one car 12 m ahead of the sensor."""
    car = Box3D(12.0, 3.0, -1.73 + 0.75, 4.0, 1.8, 1.5, 0.3, "Car")
    spec = SyntheticSceneSpec(objects=[ObjectProxy(car, 150.0)], extent=30.0,
                              ground_points=15000)
    return synthesize_scene(spec, seed=7)
