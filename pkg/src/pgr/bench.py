"""Sequential throughput measurement of the removal pipeline."""

from __future__ import annotations

import os
import platform
import time
from dataclasses import dataclass, field

from .errors import ValidationError
from .removal import STAGES, RemovalConfig, apply_pgr, filter_cloud


@dataclass(frozen=True)
class BenchReport:
    frames: int
    wall_time: float
    stages: dict = field(default_factory=dict)
    points: int = 0

    @property
    def fps(self) -> float:
        return self.frames / self.wall_time if self.wall_time > 0 else float("inf")

    @property
    def ms_per_frame(self) -> float:
        return 1000.0 * self.wall_time / self.frames if self.frames else 0.0

    def lines(self, stage_breakdown: bool = True):
        out = [f"frames        {self.frames}",
               f"points        {self.points}",
               f"wall time     {self.wall_time:.4f} s",
               f"throughput    {self.fps:.1f} fps ({self.ms_per_frame:.2f} ms/frame)"]
        if stage_breakdown:
            for s in STAGES:
                out.append(f"  {s:<12}{1000.0 * self.stages.get(s, 0.0) / max(self.frames, 1):.3f} ms/frame")
        return out


def machine_info() -> dict:
    return {"python": platform.python_version(), "machine": platform.machine(),
            "processor": platform.processor() or "unknown",
            "cpus": os.cpu_count(), "system": platform.system()}


def bench_pipeline(frames, cfg: RemovalConfig = RemovalConfig(),
                   repetitions: int = 1) -> BenchReport:
    """Run grid, removal, restoration and masking frame by frame.

    Frames must already be in memory; nothing in the timed loop touches disk.
    """
    if repetitions < 1:
        raise ValidationError(f"repetitions must be >= 1, got {repetitions}")
    frames = list(frames)
    stages = {s: 0.0 for s in STAGES}
    points = 0
    start = time.perf_counter()
    for _ in range(repetitions):
        for cloud in frames:
            mask, _ = apply_pgr(cloud, cfg, profile=stages)
            t = time.perf_counter()
            filter_cloud(cloud, mask)
            stages["mask"] += time.perf_counter() - t
            points += len(cloud)
    wall = time.perf_counter() - start
    return BenchReport(len(frames) * repetitions, wall, stages, points)
