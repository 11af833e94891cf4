"""Binary model and field files.

Model layout (little-endian), after the 8-byte magic ``RCDTNS01``:

    u32 K, m, n, flags, height, width     flags: bit0 enrich, bit1 uniform reference
    f64 variance_fraction, epsilon, pixel_spacing
    f64 x n   angles
    f64 t_min, t_max
    per class: u32 class_id, d, n_sv; f64 basis (m*n x d, column-major); f64 singular values
    u32 CRC32 of everything before it

Field layout: magic ``RCDTFLD1``, u32 m, n; f64 x n angles; f64 t_min, t_max;
f64 values (m x n, column-major); u32 CRC32.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import CorruptFile, FormatVersionMismatch
from .grids import Grid1D, ProjectionGrid
from .subspace import ClassBasis, Model
from .transforms import RcdtField

MODEL_MAGIC = b"RCDTNS01"
FIELD_MAGIC = b"RCDTFLD1"

FLAG_ENRICH = 1
FLAG_UNIFORM_REF = 2


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf, self.pos, self.what = buf, 0, what

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise CorruptFile(f"{self.what}: unexpected end of data")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def array(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.pos + size > len(self.buf):
            raise CorruptFile(f"{self.what}: unexpected end of data")
        out = np.frombuffer(self.buf, dtype="<f8", count=count, offset=self.pos).astype(np.float64)
        self.pos += size
        return out


def _check_envelope(raw: bytes, magic: bytes, what: str) -> bytes:
    if len(raw) < len(magic) + 4:
        raise CorruptFile(f"{what}: file too short")
    head = raw[:len(magic)]
    if head[:-2] != magic[:-2]:
        raise CorruptFile(f"{what}: bad magic {head!r}")
    if head != magic:
        raise FormatVersionMismatch(f"{what}: format {head[-2:].decode('ascii', 'replace')}, "
                                    f"this build reads {magic[-2:].decode()}")
    body, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptFile(f"{what}: checksum mismatch")
    return body[len(magic):]


def _grid_bytes(proj: ProjectionGrid) -> bytes:
    return (np.asarray(proj.thetas, "<f8").tobytes()
            + struct.pack("<2d", proj.t_grid.x_min, proj.t_grid.x_max))


def model_bytes(model: Model) -> bytes:
    p = model.proj
    h, w = p.image_shape if p.image_shape is not None else (0, 0)
    flags = (FLAG_ENRICH if model.enrich_translation else 0) | FLAG_UNIFORM_REF
    parts = [MODEL_MAGIC,
             struct.pack("<6I", model.n_classes, p.m, p.n, flags, h, w),
             struct.pack("<3d", model.variance_fraction, model.epsilon, p.pixel_spacing),
             _grid_bytes(p)]
    for c in model.classes:
        sv = np.asarray(c.singular_values, "<f8")
        parts.append(struct.pack("<3I", c.class_id, c.d, sv.size))
        parts.append(np.asarray(c.basis, "<f8").tobytes(order="F"))
        parts.append(sv.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def model_from_bytes(raw: bytes, what="model") -> Model:
    r = _Reader(_check_envelope(raw, MODEL_MAGIC, what), what)
    K, m, n, flags, h, w = r.take("<6I")
    vf, eps, ps = r.take("<3d")
    thetas = r.array(n)
    t_min, t_max = r.take("<2d")
    try:
        proj = ProjectionGrid(Grid1D(m, t_min, t_max), thetas, (h, w) if h and w else None, ps)
    except ValueError as e:
        raise CorruptFile(f"{what}: invalid grid ({e})") from None
    classes = []
    for _ in range(K):
        cid, d, nsv = r.take("<3I")
        basis = r.array(m * n * d).reshape((m * n, d), order="F")
        classes.append(ClassBasis(cid, np.ascontiguousarray(basis), r.array(nsv)))
    if r.pos != len(r.buf):
        raise CorruptFile(f"{what}: {len(r.buf) - r.pos} trailing bytes")
    try:
        return Model(tuple(classes), proj, eps, vf, bool(flags & FLAG_ENRICH))
    except ValueError as e:
        raise CorruptFile(f"{what}: {e}") from None


def save_model(model: Model, path):
    with open(path, "wb") as f:
        f.write(model_bytes(model))


def load_model(path) -> Model:
    with open(path, "rb") as f:
        return model_from_bytes(f.read(), str(path))


def field_bytes(field: RcdtField) -> bytes:
    p = field.proj
    body = (FIELD_MAGIC + struct.pack("<2I", p.m, p.n) + _grid_bytes(p)
            + np.asarray(field.values, "<f8").tobytes(order="F"))
    return body + struct.pack("<I", zlib.crc32(body))


def save_field(field: RcdtField, path):
    with open(path, "wb") as f:
        f.write(field_bytes(field))


def load_field(path) -> RcdtField:
    with open(path, "rb") as f:
        raw = f.read()
    r = _Reader(_check_envelope(raw, FIELD_MAGIC, str(path)), str(path))
    m, n = r.take("<2I")
    thetas = r.array(n)
    t_min, t_max = r.take("<2d")
    values = r.array(m * n).reshape((m, n), order="F")
    if r.pos != len(r.buf):
        raise CorruptFile(f"{path}: trailing bytes")
    try:
        proj = ProjectionGrid(Grid1D(m, t_min, t_max), thetas)
    except ValueError as e:
        raise CorruptFile(f"{path}: invalid grid ({e})") from None
    return RcdtField(proj, np.ascontiguousarray(values))
