import gc
import statistics

import pytest

from pgr.bench import bench_pipeline, machine_info
from pgr.errors import ValidationError
from pgr.synthetic import urban_scene


@pytest.fixture(scope="module")
def frames():
    return [urban_scene(s, ground_points=20000).cloud for s in range(4)]


def test_reports_positive_throughput(frames):
    rep = bench_pipeline(frames)
    assert rep.frames == 4 and rep.fps > 0
    assert rep.points == sum(len(f) for f in frames)
    assert sum(rep.stages.values()) <= rep.wall_time
    assert all(v > 0 for v in rep.stages.values())
    assert any("fps" in line for line in rep.lines())


def test_time_scales_with_frame_count(frames):
    bench_pipeline(frames)   # warm caches
    # interleave runs so slow drift in machine speed hits both sizes alike
    ratios = []
    gc.disable()
    try:
        for _ in range(7):
            one = bench_pipeline(frames, repetitions=2).wall_time
            two = bench_pipeline(frames, repetitions=4).wall_time
            ratios.append(two / one)
    finally:
        gc.enable()
    assert statistics.median(ratios) == pytest.approx(2.0, rel=0.2)


def test_rejects_zero_repetitions(frames):
    with pytest.raises(ValidationError):
        bench_pipeline(frames, repetitions=0)


def test_machine_info_fields():
    assert {"python", "cpus", "machine"} <= set(machine_info())
