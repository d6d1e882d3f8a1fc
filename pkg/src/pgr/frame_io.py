"""Point-cloud frames, box annotations and their on-disk formats.

Frames are stored KITTI-velodyne style: densely packed little-endian
float32 records ``x, y, z, intensity`` with no header. Boxes are JSON
Lines, one object per line::

    {"class": "Car", "cx": 0.0, "cy": 0.0, "cz": 0.0,
     "length": 4.0, "width": 1.8, "height": 1.5, "yaw": 0.0}

Ground masks are a packed bitset: a little-endian uint64 point count
followed by ``ceil(N / 8)`` bytes, least significant bit first.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError, FormatError, ParseError, ValidationError

RECORD_DTYPE = np.dtype("<f4")
RECORD_WIDTH = 4  # x, y, z, intensity

BOX_FIELDS = ("class", "cx", "cy", "cz", "length", "width", "height", "yaw")


def _readonly(a):
    v = a.view()
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class PointCloud:
    """One LiDAR frame: ``N`` points with xyz in meters and ``k`` attributes.

    Coordinates are in the sensor frame, sensor at the origin, z up.
    Arrays are exposed read-only.
    """

    xyz: np.ndarray
    attributes: np.ndarray = None
    frame_id: str = ""

    def __post_init__(self):
        xyz = np.asarray(self.xyz)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            if xyz.size == 0:
                xyz = xyz.reshape(0, 3)
            else:
                raise ContractError(f"xyz must have shape (N, 3), got {xyz.shape}")
        if not np.issubdtype(xyz.dtype, np.floating):
            xyz = xyz.astype(np.float64)
        attrs = self.attributes
        if attrs is None:
            attrs = np.zeros((len(xyz), 0), dtype=xyz.dtype)
        attrs = np.asarray(attrs)
        if attrs.ndim == 1:
            attrs = attrs.reshape(-1, 1)
        if attrs.shape[0] != xyz.shape[0]:
            raise ContractError(
                f"{attrs.shape[0]} attribute rows for {xyz.shape[0]} points"
            )
        _check_finite(xyz, "coordinate")
        _check_finite(attrs, "attribute")
        object.__setattr__(self, "xyz", _readonly(xyz))
        object.__setattr__(self, "attributes", _readonly(attrs))

    def __len__(self):
        return self.xyz.shape[0]

    @property
    def arity(self) -> int:
        return self.attributes.shape[1]

    @property
    def x(self):
        return self.xyz[:, 0]

    @property
    def y(self):
        return self.xyz[:, 1]

    @property
    def z(self):
        return self.xyz[:, 2]

    def select(self, index) -> "PointCloud":
        """Subset by boolean mask or integer index array, order preserved."""
        return PointCloud(self.xyz[index], self.attributes[index], self.frame_id)

    def bitwise_equal(self, other: "PointCloud") -> bool:
        return (
            self.frame_id == other.frame_id
            and self.xyz.dtype == other.xyz.dtype
            and self.attributes.dtype == other.attributes.dtype
            and self.xyz.shape == other.xyz.shape
            and self.attributes.shape == other.attributes.shape
            and self.xyz.tobytes() == other.xyz.tobytes()
            and self.attributes.tobytes() == other.attributes.tobytes()
        )

    @classmethod
    def empty(cls, arity: int = 1, frame_id: str = "") -> "PointCloud":
        return cls(
            np.zeros((0, 3), dtype=RECORD_DTYPE),
            np.zeros((0, arity), dtype=RECORD_DTYPE),
            frame_id,
        )


def _check_finite(a, what):
    if a.size == 0 or not np.issubdtype(a.dtype, np.floating):
        return
    ok = np.isfinite(a).all(axis=1)
    if not ok.all():
        i = int(np.argmin(ok))
        raise DataError(f"non-finite {what} value at point {i}: {a[i].tolist()}")


# -- binary frames ------------------------------------------------------------


def load_frame_binary(path, frame_id: str | None = None) -> PointCloud:
    """Read a KITTI-style ``.bin`` frame (x, y, z, intensity as float32)."""
    path = Path(path)
    raw = path.read_bytes()
    record = RECORD_WIDTH * RECORD_DTYPE.itemsize
    if len(raw) % record:
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of the {record}-byte record"
        )
    data = np.frombuffer(raw, dtype=RECORD_DTYPE).reshape(-1, RECORD_WIDTH)
    if frame_id is None:
        frame_id = path.stem
    try:
        return PointCloud(data[:, :3], data[:, 3:], frame_id)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def frame_bytes(cloud: PointCloud) -> bytes:
    if cloud.arity != 1:
        raise ContractError(
            f"binary frames carry exactly one attribute, cloud has {cloud.arity}"
        )
    out = np.empty((len(cloud), RECORD_WIDTH), dtype=RECORD_DTYPE)
    out[:, :3] = cloud.xyz
    out[:, 3:] = cloud.attributes
    return out.tobytes()


def save_frame_binary(cloud: PointCloud, path) -> None:
    """Write ``cloud`` as float32 records; the write is atomic."""
    atomic_write_bytes(path, frame_bytes(cloud))


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- boxes --------------------------------------------------------------------


class ObjectClass(str, enum.Enum):
    CAR = "Car"
    PEDESTRIAN = "Pedestrian"
    CYCLIST = "Cyclist"
    OTHER = "Other"

    @classmethod
    def parse(cls, name) -> "ObjectClass":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"car": cls.CAR, "vehicle": cls.CAR, "pedestrian": cls.PEDESTRIAN,
                   "cyclist": cls.CYCLIST, "other": cls.OTHER}
        if key not in aliases:
            raise ValidationError(f"unknown class label {name!r}")
        return aliases[key]


@dataclass(frozen=True)
class Box3D:
    """Yaw-oriented 3D box in the sensor frame; dimensions are full extents."""

    center_x: float
    center_y: float
    center_z: float
    length: float
    width: float
    height: float
    yaw: float = 0.0
    class_label: ObjectClass = ObjectClass.CAR

    def __post_init__(self):
        object.__setattr__(self, "class_label", ObjectClass.parse(self.class_label))
        vals = (self.center_x, self.center_y, self.center_z,
                self.length, self.width, self.height, self.yaw)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite box field in {vals}")
        if min(self.length, self.width, self.height) <= 0:
            raise ValidationError(
                f"box dimensions must be positive, got "
                f"({self.length}, {self.width}, {self.height})"
            )
        if not -math.pi <= self.yaw <= math.pi:
            raise ValidationError(f"yaw {self.yaw} outside [-pi, pi]")

    @property
    def center(self):
        return np.array([self.center_x, self.center_y, self.center_z])

    @property
    def dims(self):
        return np.array([self.length, self.width, self.height])

    def to_dict(self) -> dict:
        return {"class": self.class_label.value, "cx": self.center_x,
                "cy": self.center_y, "cz": self.center_z, "length": self.length,
                "width": self.width, "height": self.height, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, d: dict) -> "Box3D":
        missing = [k for k in BOX_FIELDS if k not in d]
        if missing:
            raise ParseError(f"missing fields {missing}")
        try:
            nums = [float(d[k]) for k in BOX_FIELDS[1:]]
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc)) from None
        return cls(*nums, class_label=d["class"])


def boxes_to_text(boxes) -> str:
    return "".join(json.dumps(b.to_dict()) + "\n" for b in boxes)


def save_boxes(boxes, path) -> None:
    atomic_write_text(path, boxes_to_text(boxes))


def load_boxes(path) -> list[Box3D]:
    """Parse a JSON Lines box file. Blank lines are skipped."""
    boxes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                if not isinstance(entry, dict):
                    raise ParseError("entry is not a JSON object")
                boxes.append(Box3D.from_dict(entry))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from None
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return boxes


def box_mask(xyz, box: Box3D, scale: float = 1.0):
    """Boolean mask of points inside ``box`` with all dimensions times ``scale``.

    Membership is boundary inclusive.
    """
    if scale < 0:
        raise ValidationError(f"scale must be >= 0, got {scale}")
    xyz = np.asarray(xyz, dtype=np.float64)
    d = xyz - box.center
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    lx = d[:, 0] * c + d[:, 1] * s
    ly = -d[:, 0] * s + d[:, 1] * c
    half = 0.5 * scale * box.dims
    return (np.abs(lx) <= half[0]) & (np.abs(ly) <= half[1]) & (np.abs(d[:, 2]) <= half[2])


def points_in_box(cloud: PointCloud, box: Box3D, scale: float = 1.0):
    """Sorted indices of the points of ``cloud`` inside the scaled box."""
    return np.flatnonzero(box_mask(cloud.xyz, box, scale))


# -- ground masks -------------------------------------------------------------


def save_ground_mask(mask, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    head = np.array([mask.size], dtype="<u8").tobytes()
    atomic_write_bytes(path, head + np.packbits(mask, bitorder="little").tobytes())


def load_ground_mask(path, n_points: int | None = None):
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise FormatError(f"{path}: missing point-count header")
    n = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    if len(raw) - 8 != (n + 7) // 8:
        raise FormatError(f"{path}: {len(raw) - 8} payload bytes for {n} points")
    if n_points is not None and n != n_points:
        raise ContractError(f"{path}: mask has {n} entries, frame has {n_points} points")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=8), bitorder="little")
    return bits[:n].astype(bool)


def sidecar_paths(frame_path) -> dict:
    """Ground-mask and box files paired with a frame by filename stem."""
    p = Path(frame_path)
    return {"ground": p.with_suffix(".ground"), "boxes": p.with_suffix(".boxes.jsonl")}


@dataclass(frozen=True, eq=False)
class Scene:
    """A frame together with its ground labels and box annotations."""

    cloud: PointCloud
    ground: np.ndarray
    boxes: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter((self.cloud, self.ground, self.boxes))


def load_scene(frame_path) -> Scene:
    cloud = load_frame_binary(frame_path)
    side = sidecar_paths(frame_path)
    ground = load_ground_mask(side["ground"], len(cloud))
    boxes = load_boxes(side["boxes"]) if side["boxes"].exists() else []
    return Scene(cloud, ground, tuple(boxes))


def save_scene(scene: Scene, frame_path) -> list[Path]:
    side = sidecar_paths(frame_path)
    save_frame_binary(scene.cloud, frame_path)
    save_ground_mask(scene.ground, side["ground"])
    save_boxes(scene.boxes, side["boxes"])
    return [Path(frame_path), side["ground"], side["boxes"]]
