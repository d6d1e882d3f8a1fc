"""Command-line entry point: ``pgr <command> ...``.

Every command reads frames either from ``--input`` (a glob of ``.bin``
files, with optional ``.ground`` / ``.boxes.jsonl`` sidecars) or from
``--synthetic N`` seeded urban scenes. Outputs are written atomically and
removed again if the command fails part way.
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_pipeline, machine_info
from .codec import RATE_SCALES, Bitstream, CodecConfig, decode_frame, encode_frame, measure_bpp
from .errors import PGRError
from .evaluation import (Preprocessor, bd_metric, join_metric, rate_sweep, read_metric_file,
                         read_rate_table, write_rate_table)
from .frame_io import (atomic_write_bytes, atomic_write_text, frame_bytes, load_frame_binary,
                       load_scene, save_scene, sidecar_paths)
from .oracle import OracleConfig, apply_oracle
from .removal import apply_pgr, filter_cloud, resolve_config
from .synthetic import urban_scene


class CommandError(PGRError):
    pass


class Outputs:
    """Tracks written files so a failed command can remove them."""

    def __init__(self, directory=None):
        self.paths = []
        self.created = False
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None and not self.directory.exists():
            self.directory.mkdir(parents=True)
            self.created = True

    def path(self, name):
        p = self.directory / name
        self.paths.append(p)
        return p

    def add(self, p):
        self.paths.append(Path(p))
        return p

    def rollback(self):
        for p in self.paths:
            Path(p).unlink(missing_ok=True)
        if self.created and not any(self.directory.iterdir()):
            self.directory.rmdir()


# -- frame sources ------------------------------------------------------------


def _add_source(p, default_synthetic=0, points=20000, extent=40.0):
    src = p.add_argument_group("frame source")
    src.add_argument("--input", help="glob of .bin frames (quote it)")
    src.add_argument("--synthetic", type=int, default=default_synthetic, metavar="N",
                     help="generate N seeded urban scenes instead of reading files")
    src.add_argument("--seed", type=int, default=0, help="seed of the first synthetic scene")
    src.add_argument("--points", type=int, default=points,
                     help="ground returns per synthetic scene (default %(default)s)")
    src.add_argument("--extent", type=float, default=extent,
                     help="synthetic scene radius in meters (default %(default)s)")


def _scene_task(args):
    seed, points, extent = args
    return urban_scene(seed, ground_points=points, extent=extent)


def _load_task(path):
    side = sidecar_paths(path)
    if side["ground"].exists():
        return load_scene(path)
    return load_frame_binary(path)


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def load_frames(args, workers=1):
    if args.input:
        paths = sorted(glob.glob(args.input))
        if not paths:
            raise CommandError(f"no frames match {args.input!r}")
        return _map(_load_task, paths, workers)
    if args.synthetic > 0:
        tasks = [(args.seed + i, args.points, args.extent) for i in range(args.synthetic)]
        return _map(_scene_task, tasks, workers)
    raise CommandError("no frames: give --input GLOB or --synthetic N")


def _cloud(frame):
    return getattr(frame, "cloud", frame)


def _frame_name(frame, index):
    fid = _cloud(frame).frame_id
    return fid if fid else f"frame{index:06d}"


def _csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# -- commands -----------------------------------------------------------------


def _remove_task(payload):
    frame, cfg = payload
    cloud = _cloud(frame)
    mask, decision = apply_pgr(cloud, cfg)
    return frame_bytes(filter_cloud(cloud, mask)), int(mask.sum()), decision.counts()


def cmd_remove(args, out: Outputs):
    cfg = resolve_config(args.config)
    if args.no_restoration:
        cfg = replace(cfg, restoration=False)
    frames = load_frames(args, args.workers)
    results = _map(_remove_task, [(f, cfg) for f in frames], args.workers)
    rows = []
    for i, (frame, (data, kept, counts)) in enumerate(zip(frames, results)):
        name = _frame_name(frame, i)
        atomic_write_bytes(out.path(f"{name}.bin"), data)
        n = len(_cloud(frame))
        rows.append((name, n, kept, f"{1 - kept / n if n else 0.0:.6f}", counts["pillars"],
                     counts["retained"], counts["restored"], counts["removed"]))
    atomic_write_text(out.path("summary.csv"), _csv(
        ("frame", "points_in", "points_out", "removed_fraction", "pillars",
         "retained", "restored", "removed_pillars"), rows))
    for r in rows:
        print(f"{r[0]}: {r[1]} -> {r[2]} points (removed {float(r[3]):.1%})")
    return 0


def cmd_oracle(args, out: Outputs):
    cfg = OracleConfig(args.ef)
    frames = load_frames(args, args.workers)
    rows = []
    for i, frame in enumerate(frames):
        if not hasattr(frame, "ground"):
            raise CommandError(f"frame {_frame_name(frame, i)} has no .ground sidecar")
        keep = apply_oracle(frame.cloud, frame.ground, frame.boxes, cfg)
        name = _frame_name(frame, i)
        atomic_write_bytes(out.path(f"{name}.bin"), frame_bytes(filter_cloud(frame.cloud, keep)))
        rows.append((name, len(frame.cloud), int(keep.sum()), int(frame.ground.sum()),
                     int((keep & frame.ground).sum())))
    atomic_write_text(out.path("summary.csv"), _csv(
        ("frame", "points_in", "points_out", "ground", "ground_kept"), rows))
    return 0


def cmd_encode(args, out: Outputs):
    cfg = CodecConfig(args.scale, args.units_per_meter)
    pre = Preprocessor(args.preprocessor)
    frames = load_frames(args, args.workers)
    rows = []
    for i, frame in enumerate(frames):
        name = _frame_name(frame, i)
        b = encode_frame(pre(frame), cfg, n_orig=len(_cloud(frame)))
        atomic_write_bytes(out.path(f"{name}.pgrb"), b.to_bytes())
        rows.append((name, b.n_orig, b.n_points, b.nbytes, repr(measure_bpp(b))))
    atomic_write_text(out.path("summary.csv"), _csv(
        ("frame", "points", "coded_points", "bytes", "bpp"), rows))
    return 0


def cmd_decode(args, out: Outputs):
    paths = sorted(glob.glob(args.input)) if args.input else []
    if not paths:
        raise CommandError(f"no frames match {args.input!r}")
    for p in paths:
        cloud = decode_frame(Bitstream.from_bytes(Path(p).read_bytes()))
        atomic_write_bytes(out.path(f"{Path(p).stem}.bin"), frame_bytes(cloud))
    return 0


def cmd_sweep(args, out: Outputs):
    scales = [float(s) for s in args.scales.split(",")] if args.scales else list(RATE_SCALES)
    preprocessors = [Preprocessor(p) for p in (args.preprocessor or ["none", "pgr:pgr-c0-kitti"])]
    frames = load_frames(args, args.workers)
    rows = []
    for pre in preprocessors:
        rows += rate_sweep(frames, pre, scales, args.units_per_meter)
    write_rate_table(rows, out.add(args.out))
    for r in rows:
        print(f"{r.preprocessor:<20} scale {r.scale:<7g} bpp {r.bpp:.4f}")
    return 0


def cmd_bench(args, out: Outputs):
    cfg = resolve_config(args.config)
    frames = [_cloud(f) for f in load_frames(args)]
    bench_pipeline(frames[:1], cfg)  # warm caches outside the timed run
    report = bench_pipeline(frames, cfg, args.repetitions)
    info = machine_info()
    for line in report.lines(args.stage_breakdown):
        print(line)
    print("machine       " + ", ".join(f"{k}={v}" for k, v in info.items()))
    print("points/frame  " + " ".join(str(len(f)) for f in frames))
    if args.out:
        record = {"frames": report.frames, "wall_time": report.wall_time, "fps": report.fps,
                  "stages": report.stages, "points": report.points, "machine": info,
                  "points_per_frame": [len(f) for f in frames]}
        atomic_write_text(out.add(args.out), json.dumps(record, indent=2) + "\n")
    return 0


def cmd_bd(args, out: Outputs):
    def curve(table, metric_file, pre):
        rows = read_rate_table(table)
        metrics = read_metric_file(metric_file) if metric_file else {}
        return join_metric(rows, metrics, pre)

    anchor = curve(args.anchor, args.anchor_metric, args.anchor_preprocessor)
    test = curve(args.test, args.test_metric, args.test_preprocessor)
    print(repr(bd_metric(anchor, test)))
    return 0


def cmd_synth(args, out: Outputs):
    if args.synthetic <= 0:
        raise CommandError("no frames: --synthetic must be positive")
    for scene in load_frames(args, args.workers):
        name = scene.cloud.frame_id
        for p in save_scene(scene, out.directory / f"{name}.bin"):
            out.add(p)
    print(f"wrote {args.synthetic} scenes to {out.directory}")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pgr", description="Pillar-based ground removal and octree rate evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("remove", help="filter frames with pillar-based ground removal")
    _add_source(p)
    p.add_argument("--config", default="pgr-c0-kitti", help="preset name or JSON file")
    p.add_argument("--no-restoration", action="store_true", help="skip the restoration pass")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_remove, out_dir=True)

    p = sub.add_parser("oracle", help="label-driven removal with box restoration")
    _add_source(p)
    p.add_argument("--ef", type=float, default=0.0, help="extension factor (>= 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_oracle, out_dir=True)

    p = sub.add_parser("encode", help="encode frames to .pgrb bitstreams")
    _add_source(p)
    p.add_argument("--scale", type=float, required=True, help="geometry scale in (0, 1]")
    p.add_argument("--units-per-meter", type=float, default=1000.0)
    p.add_argument("--preprocessor", default="none", help="none | pgr:<config> | oracle:<EF>")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_encode, out_dir=True)

    p = sub.add_parser("decode", help="decode .pgrb bitstreams to .bin frames")
    p.add_argument("--input", required=True, help="glob of .pgrb files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_decode, out_dir=True)

    p = sub.add_parser("sweep", help="bpp at several geometry scales")
    _add_source(p)
    p.add_argument("--preprocessor", action="append",
                   help="repeatable; default: none and pgr:pgr-c0-kitti")
    p.add_argument("--scales", help="comma-separated scales (default: the six reference scales)")
    p.add_argument("--units-per-meter", type=float, default=1000.0)
    p.add_argument("--out", required=True, help="output CSV table")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep, out_dir=False)

    p = sub.add_parser("bench", help="sequential throughput of the removal pipeline")
    _add_source(p, default_synthetic=10, points=95000, extent=60.0)
    p.add_argument("--config", default="pgr-c0-kitti")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--stage-breakdown", action="store_true")
    p.add_argument("--out", help="optional JSON report")
    p.set_defaults(func=cmd_bench, out_dir=False)

    p = sub.add_parser("bd", help="Bjontegaard delta of two rate tables")
    p.add_argument("--anchor", required=True, help="anchor rate table CSV")
    p.add_argument("--test", required=True, help="test rate table CSV")
    p.add_argument("--anchor-metric", help="scale,metric CSV joined to the anchor")
    p.add_argument("--test-metric", help="scale,metric CSV joined to the test table")
    p.add_argument("--anchor-preprocessor", help="use only rows of this preprocessor")
    p.add_argument("--test-preprocessor", help="use only rows of this preprocessor")
    p.set_defaults(func=cmd_bd, out_dir=False)

    p = sub.add_parser("synth", help="write synthetic scenes with labels and boxes")
    _add_source(p, default_synthetic=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_synth, out_dir=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Outputs(args.out if args.out_dir else None)
    try:
        return args.func(args, out)
    except (PGRError, OSError) as exc:
        out.rollback()
        print(f"pgr {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        out.rollback()
        raise


if __name__ == "__main__":
    sys.exit(main())
