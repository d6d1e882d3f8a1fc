"""Point preservation, rate sweeps and Bjontegaard deltas."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .codec import CodecConfig, encode_frame, measure_bpp
from .errors import (ArityError, ContractError, DomainError, ParseError,
                     UnknownNameError, ValidationError)
from .frame_io import ObjectClass, PointCloud, Scene, atomic_write_text, box_mask
from .oracle import OracleConfig, apply_oracle
from .removal import apply_pgr, filter_cloud, resolve_config

# -- preservation -------------------------------------------------------------


@dataclass(frozen=True)
class PreservationReport:
    """Kept/total point counts per class (union of that class's boxes) and overall.

    Classes without boxes, or whose boxes hold no points, are absent.
    """

    class_counts: dict = field(default_factory=dict)  # ObjectClass -> (kept, total)
    kept: int = 0
    total: int = 0

    @property
    def per_class(self) -> dict:
        return {c: k / t for c, (k, t) in self.class_counts.items() if t}

    @property
    def overall(self):
        return self.kept / self.total if self.total else None

    def __add__(self, other: "PreservationReport") -> "PreservationReport":
        merged = dict(self.class_counts)
        for c, (k, t) in other.class_counts.items():
            k0, t0 = merged.get(c, (0, 0))
            merged[c] = (k0 + k, t0 + t)
        return PreservationReport(merged, self.kept + other.kept, self.total + other.total)


def preservation_report(cloud: PointCloud, mask, boxes) -> PreservationReport:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (len(cloud),):
        raise ContractError(f"mask of length {mask.size} for {len(cloud)} points")
    by_class = {}
    for box in boxes:
        inside = box_mask(cloud.xyz, box)
        acc = by_class.setdefault(box.class_label, np.zeros(len(cloud), dtype=bool))
        acc |= inside
    counts = {}
    for cls, inside in by_class.items():
        total = int(inside.sum())
        if total:
            counts[cls] = (int(mask[inside].sum()), total)
    return PreservationReport(counts, int(mask.sum()), len(cloud))


def in_box_counts(report: PreservationReport):
    """Kept and total over all classes' box points."""
    kept = sum(k for k, _ in report.class_counts.values())
    total = sum(t for _, t in report.class_counts.values())
    return kept, total


# -- rate curves and BD -------------------------------------------------------


@dataclass(frozen=True)
class RateCurve:
    """``(bpp, metric)`` samples with strictly increasing, positive bpp."""

    bpp: tuple
    metric: tuple

    def __post_init__(self):
        bpp = tuple(float(v) for v in self.bpp)
        metric = tuple(float(v) for v in self.metric)
        if len(bpp) != len(metric):
            raise ContractError(f"{len(bpp)} rates for {len(metric)} metric values")
        if any(not (b > 0 and math.isfinite(b)) for b in bpp):
            raise ValidationError(f"bpp values must be positive and finite: {bpp}")
        if any(b2 <= b1 for b1, b2 in zip(bpp, bpp[1:])):
            raise ValidationError(f"bpp must increase strictly: {bpp}")
        object.__setattr__(self, "bpp", bpp)
        object.__setattr__(self, "metric", metric)

    @classmethod
    def from_pairs(cls, pairs) -> "RateCurve":
        pairs = sorted(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.bpp)


def fit_log_rate(curve: RateCurve):
    """Cubic in ``log10(bpp)``; least squares above four samples, exact at four."""
    if len(curve) < 4:
        raise ArityError(f"a cubic fit needs at least 4 points, curve has {len(curve)}")
    x = np.log10(curve.bpp)
    return np.polyfit(x, curve.metric, 3)


def bd_metric(anchor: RateCurve, test: RateCurve) -> float:
    """Mean vertical gap ``test - anchor`` over the shared log10-rate interval."""
    pa, pt = fit_log_rate(anchor), fit_log_rate(test)
    xa, xt = np.log10(anchor.bpp), np.log10(test.bpp)
    lo, hi = max(xa.min(), xt.min()), min(xa.max(), xt.max())
    if not hi > lo:
        raise DomainError(
            f"log-rate ranges [{xa.min():.4f}, {xa.max():.4f}] and "
            f"[{xt.min():.4f}, {xt.max():.4f}] do not overlap"
        )
    ia, it = np.polyint(pa), np.polyint(pt)
    area = (np.polyval(it, hi) - np.polyval(it, lo)) - (np.polyval(ia, hi) - np.polyval(ia, lo))
    return float(area / (hi - lo))


# -- preprocessors and rate sweeps --------------------------------------------


class Preprocessor:
    """Named frame filter: ``none``, ``pgr:<preset or .json>`` or ``oracle:<EF>``.

    Calling it on a frame returns the filtered cloud. Oracle filtering
    needs a :class:`Scene` (ground labels and boxes).
    """

    def __init__(self, name: str):
        self.name = name
        kind, _, arg = name.partition(":")
        self.kind = kind.strip().lower()
        if self.kind == "none" and not arg:
            self._params = None
        elif self.kind == "pgr":
            self._params = resolve_config(arg or "pgr-c0-kitti")
        elif self.kind == "oracle":
            try:
                self._params = OracleConfig(float(arg))
            except ValueError:
                raise UnknownNameError(f"bad extension factor in {name!r}") from None
        else:
            raise UnknownNameError(
                f"unknown preprocessor {name!r}; use none, pgr:<config> or oracle:<EF>"
            )

    def mask(self, frame):
        cloud = frame.cloud if isinstance(frame, Scene) else frame
        if self.kind == "none":
            return np.ones(len(cloud), dtype=bool)
        if self.kind == "pgr":
            return apply_pgr(cloud, self._params)[0]
        if not isinstance(frame, Scene):
            raise ContractError("oracle preprocessing needs ground labels and boxes")
        return apply_oracle(cloud, frame.ground, frame.boxes, self._params)

    def __call__(self, frame) -> PointCloud:
        cloud = frame.cloud if isinstance(frame, Scene) else frame
        return filter_cloud(cloud, self.mask(frame))

    def __repr__(self):
        return f"Preprocessor({self.name!r})"


@dataclass(frozen=True)
class RateRow:
    scale: float
    bpp: float
    preprocessor: str
    frames: int
    per_frame: tuple = ()
    metric: float | None = None


RATE_COLUMNS = ("scale", "bpp", "preprocessor", "frames")


def rate_sweep(frames, preprocessor, scales, units_per_meter: float = 1000.0):
    """Mean bpp over ``frames`` at each scale, rows sorted by scale.

    bpp always divides by the frame's point count before preprocessing.
    """
    scales = [float(s) for s in scales]
    if len(set(scales)) != len(scales):
        raise ValidationError(f"duplicate scales in {scales}")
    configs = [CodecConfig(s, units_per_meter) for s in scales]
    pre = preprocessor if isinstance(preprocessor, Preprocessor) else Preprocessor(preprocessor)
    frames = list(frames)
    if not frames:
        return []
    per_frame = np.zeros((len(frames), len(scales)))
    for i, frame in enumerate(frames):
        n_orig = len(frame.cloud if isinstance(frame, Scene) else frame)
        kept = pre(frame)
        for j, cfg in enumerate(configs):
            per_frame[i, j] = measure_bpp(encode_frame(kept, cfg, n_orig=n_orig))
    rows = [RateRow(s, float(per_frame[:, j].mean()), pre.name, len(frames),
                    tuple(per_frame[:, j].tolist()))
            for j, s in enumerate(scales)]
    return sorted(rows, key=lambda r: r.scale)


def format_rate_table(rows) -> str:
    has_metric = any(r.metric is not None for r in rows)
    cols = RATE_COLUMNS + (("metric",) if has_metric else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        line = [repr(r.scale), repr(r.bpp), r.preprocessor, r.frames]
        if has_metric:
            line.append("" if r.metric is None else repr(r.metric))
        w.writerow(line)
    return buf.getvalue()


def write_rate_table(rows, path) -> None:
    atomic_write_text(path, format_rate_table(rows))


def read_rate_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RATE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            try:
                metric = rec.get("metric")
                rows.append(RateRow(float(rec["scale"]), float(rec["bpp"]),
                                    rec["preprocessor"], int(rec["frames"]),
                                    metric=float(metric) if metric else None))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return rows


def read_metric_file(path) -> dict:
    """``scale,metric`` CSV (header row required) to a dict."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not {"scale", "metric"} <= set(reader.fieldnames or ()):
            raise ParseError(f"{path}: expected columns scale,metric")
        out = {}
        for lineno, rec in enumerate(reader, 2):
            try:
                out[float(rec["scale"])] = float(rec["metric"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return out


def join_metric(rows, metrics: dict, preprocessor: str | None = None) -> RateCurve:
    """Attach external metric values (by scale) and build a rate curve."""
    pairs = []
    for r in rows:
        if preprocessor is not None and r.preprocessor != preprocessor:
            continue
        match = [m for s, m in metrics.items() if math.isclose(s, r.scale, rel_tol=1e-9)]
        if r.metric is not None and not match:
            match = [r.metric]
        if not match:
            raise ContractError(f"no metric value for scale {r.scale}")
        pairs.append((r.bpp, match[0]))
    return RateCurve.from_pairs(pairs)


def class_name(cls) -> str:
    return cls.value if isinstance(cls, ObjectClass) else str(cls)
