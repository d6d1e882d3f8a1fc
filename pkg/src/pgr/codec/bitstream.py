"""Bitstream container, frame encoder/decoder and the bits-per-point measure.

Layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"PGRB"
    4       1     version (1)
    5       2     frame id length L (uint16)
    7       L     frame id, UTF-8
    7+L     8     geometry_scale (float64)
            8     units_per_meter (float64)
            24    translation offset x, y, z (3 x float64, meters)
            8     N_orig, point count before any preprocessing (uint64)
            1     octree depth (uint8)
            8     decoded point count (uint64)
            8     occupancy code count (uint64)
            1     attribute arity (uint8)
            8     geometry payload length in bytes (uint64)
            8     attribute payload length in bytes (uint64)
            4     CRC-32 of every preceding byte plus both payloads
    then          geometry payload (range-coded occupancy codes)
    then          attribute payload (float32, leaf order, row major)
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import DecodeError, RateError
from ..frame_io import PointCloud
from .octree import leaves_from_codes, occupancy_codes
from .quantize import MAX_DEPTH, CodecConfig, dequantize, morton_decode, quantize
from .rangecoder import decode_bytes, encode_bytes

MAGIC = b"PGRB"
VERSION = 1
_PREFIX = struct.Struct("<4sBH")
_FIELDS = struct.Struct("<dd3dQBQQBQQ")
_CRC = struct.Struct("<I")
ATTR_DTYPE = np.dtype("<f4")


@dataclass(frozen=True, eq=False)
class Bitstream:
    frame_id: str
    config: CodecConfig
    offset: tuple
    n_orig: int
    depth: int
    n_points: int
    n_codes: int
    arity: int
    geometry: bytes
    attributes: bytes

    def _header(self) -> bytes:
        fid = self.frame_id.encode("utf-8")
        return (_PREFIX.pack(MAGIC, VERSION, len(fid)) + fid + _FIELDS.pack(
            self.config.geometry_scale, self.config.units_per_meter, *self.offset,
            self.n_orig, self.depth, self.n_points, self.n_codes, self.arity,
            len(self.geometry), len(self.attributes)))

    def to_bytes(self) -> bytes:
        head = self._header()
        crc = zlib.crc32(self.attributes, zlib.crc32(self.geometry, zlib.crc32(head)))
        return head + _CRC.pack(crc) + self.geometry + self.attributes

    @property
    def nbytes(self) -> int:
        return len(self._header()) + _CRC.size + len(self.geometry) + len(self.attributes)

    @property
    def nbits(self) -> int:
        return 8 * self.nbytes

    @property
    def payload_bits(self) -> int:
        return 8 * (len(self.geometry) + len(self.attributes))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        data = bytes(data)
        if len(data) < _PREFIX.size:
            raise DecodeError("stream shorter than its fixed prefix")
        magic, version, id_len = _PREFIX.unpack_from(data)
        if magic != MAGIC:
            raise DecodeError(f"bad magic {magic!r}")
        if version != VERSION:
            raise DecodeError(f"unsupported version {version}")
        fixed = _PREFIX.size + id_len + _FIELDS.size + _CRC.size
        if len(data) < fixed:
            raise DecodeError("truncated header")
        fid = data[_PREFIX.size:_PREFIX.size + id_len]
        (scale, upm, ox, oy, oz, n_orig, depth, n_points, n_codes, arity,
         glen, alen) = _FIELDS.unpack_from(data, _PREFIX.size + id_len)
        (crc,) = _CRC.unpack_from(data, fixed - _CRC.size)
        if len(data) != fixed + glen + alen:
            raise DecodeError(
                f"stream is {len(data)} bytes, header declares {fixed + glen + alen}"
            )
        if zlib.crc32(data[fixed:], zlib.crc32(data[:fixed - _CRC.size])) != crc:
            raise DecodeError("checksum mismatch")
        try:
            frame_id = fid.decode("utf-8")
            config = CodecConfig(scale, upm)
        except (UnicodeDecodeError, ValueError) as exc:
            raise DecodeError(f"invalid header field: {exc}") from None
        if depth > MAX_DEPTH or alen != n_points * arity * ATTR_DTYPE.itemsize:
            raise DecodeError("inconsistent header fields")
        return cls(frame_id, config, (ox, oy, oz), n_orig, depth, n_points, n_codes,
                   arity, data[fixed:fixed + glen], data[fixed + glen:])


def encode_frame(cloud: PointCloud, cfg: CodecConfig, n_orig: int | None = None) -> Bitstream:
    """Quantize, build the octree and range-code its occupancy.

    ``n_orig`` is the frame's point count before preprocessing; it defaults
    to ``len(cloud)`` and is what :func:`measure_bpp` divides by.
    """
    qc = quantize(cloud, cfg)
    depth = qc.depth
    codes = occupancy_codes(qc.morton, depth)
    attrs = np.ascontiguousarray(cloud.attributes[qc.indices], dtype=ATTR_DTYPE)
    return Bitstream(
        frame_id=cloud.frame_id,
        config=cfg,
        offset=tuple(float(v) for v in qc.offset),
        n_orig=len(cloud) if n_orig is None else int(n_orig),
        depth=depth,
        n_points=len(qc),
        n_codes=len(codes),
        arity=cloud.arity,
        geometry=encode_bytes(codes),
        attributes=attrs.tobytes(),
    )


def decode_frame(b) -> PointCloud:
    """Reconstruct points (leaf order) from a :class:`Bitstream` or its bytes."""
    if not isinstance(b, Bitstream):
        b = Bitstream.from_bytes(b)
    if b.n_points == 0:
        if b.n_codes or b.geometry:
            raise DecodeError("empty frame with a geometry payload")
        return PointCloud(np.zeros((0, 3)), np.zeros((0, b.arity), dtype=ATTR_DTYPE),
                          b.frame_id)
    if (b.n_codes == 0) != (b.depth == 0):
        raise DecodeError("octree depth and code count disagree")
    codes, used = decode_bytes(b.geometry, b.n_codes)
    if used > len(b.geometry) + 5:
        raise DecodeError("geometry payload exhausted before the last code")
    keys = leaves_from_codes(codes, b.depth, b.n_points)
    coords = morton_decode(keys, b.depth)
    xyz = dequantize(coords, b.offset, b.config)
    attrs = np.frombuffer(b.attributes, dtype=ATTR_DTYPE).reshape(b.n_points, b.arity)
    return PointCloud(xyz, attrs, b.frame_id)


def measure_bpp(b: Bitstream) -> float:
    """Whole-stream bits divided by the frame's original point count."""
    if b.n_orig == 0:
        raise RateError("bits per point undefined for a frame with no points")
    return b.nbits / b.n_orig
