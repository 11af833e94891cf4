"""IDX files, affine confounds, synthetic generative-model datasets and train splits."""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadMagic, CountMismatch, InsufficientSamples, OverlappingSpecs, SupportClipped, TruncatedFile
from .grids import LabeledImageSet

# IDX type codes we accept
_IDX_TYPES = {
    0x08: np.dtype(np.uint8),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_IDX_CODES = {np.dtype(np.uint8): 0x08, np.dtype(np.float32): 0x0D, np.dtype(np.float64): 0x0E}

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
CLIP_TOLERANCE = 1e-3


def _read_bytes(path):
    if not os.path.exists(path):
        raise TruncatedFile(f"{path}: file is missing")
    with open(path, "rb") as f:
        return f.read()


def _parse_idx(buf: bytes, path, ndim: int):
    if len(buf) < 4:
        raise TruncatedFile(f"{path}: too short for an IDX header")
    zero, code, dims = struct.unpack(">HBB", buf[:4])
    if zero != 0 or code not in _IDX_TYPES or dims != ndim:
        raise BadMagic(f"{path}: magic 0x{int.from_bytes(buf[:4], 'big'):08x} is not an IDX file with {ndim} dims")
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise TruncatedFile(f"{path}: header cut short")
    shape = struct.unpack(f">{ndim}I", buf[4:header])
    dtype = _IDX_TYPES[code]
    need = int(np.prod(shape)) * dtype.itemsize
    if len(buf) - header < need:
        raise TruncatedFile(f"{path}: expected {need} data bytes, found {len(buf) - header}")
    return np.frombuffer(buf, dtype=dtype, count=int(np.prod(shape)), offset=header).reshape(shape)


def read_idx_images(path) -> np.ndarray:
    return _parse_idx(_read_bytes(path), path, 3).astype(np.float64)


def read_idx_labels(path) -> np.ndarray:
    return _parse_idx(_read_bytes(path), path, 1).astype(np.int64)


def read_idx(images_path, labels_path, n_classes: int | None = None) -> LabeledImageSet:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return LabeledImageSet(images, labels, n_classes)


def _write_idx_array(path, arr: np.ndarray):
    arr = np.asarray(arr)
    code = _IDX_CODES[arr.dtype]
    with open(path, "wb") as f:
        f.write(struct.pack(">HBB", 0, code, arr.ndim))
        f.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        f.write(arr.astype(arr.dtype.newbyteorder(">")).tobytes())


def write_idx(data: LabeledImageSet, images_path, labels_path, dtype="u8"):
    """Write an image/label IDX pair. ``dtype`` is "u8" (rescaled to 0..255 per file) or "f32"/"f64"."""
    imgs = np.asarray(data.images, dtype=np.float64)
    if dtype == "u8":
        peak = imgs.max() if imgs.size else 0.0
        scaled = imgs if peak <= 255 and np.all(imgs == np.round(imgs)) else imgs * (255.0 / max(peak, 1e-300))
        out = np.clip(np.round(scaled), 0, 255).astype(np.uint8)
    elif dtype == "f32":
        out = imgs.astype(np.float32)
    elif dtype == "f64":
        out = imgs
    else:
        raise ValueError(f"unknown IDX dtype {dtype!r}")
    _write_idx_array(images_path, out)
    _write_idx_array(labels_path, np.asarray(data.labels).astype(np.uint8))


@dataclass(frozen=True)
class ConfoundSpec:
    """Radial translation range in pixels and isotropic scale range."""

    translation_range: tuple[float, float] = (0.0, 0.0)
    scale_range: tuple[float, float] = (1.0, 1.0)
    rng_seed: int = 0

    def __post_init__(self):
        t0, t1 = self.translation_range
        a0, a1 = self.scale_range
        if not t1 >= t0 >= 0:
            raise ValueError(f"bad translation range {self.translation_range}")
        if not a1 >= a0 > 0:
            raise ValueError(f"bad scale range {self.scale_range}")

    def draw(self, rng: np.random.Generator):
        """One (dx, dy, scale) triple: direction uniform on the circle, magnitude and scale uniform."""
        phi = rng.uniform(0.0, 2 * np.pi)
        mag = rng.uniform(*self.translation_range)
        alpha = rng.uniform(*self.scale_range)
        return mag * np.cos(phi), mag * np.sin(phi), alpha


def _overlap(a, b) -> bool:
    # the out-of-distribution lower bound is exclusive ("more than 7 pixels")
    return a[0] < b[1] and b[0] < a[1]


def check_disjoint(spec_in: ConfoundSpec, spec_out: ConfoundSpec):
    """Raise OverlappingSpecs unless the two confound parameter boxes are disjoint."""
    if _overlap(spec_in.translation_range, spec_out.translation_range) and _overlap(spec_in.scale_range,
                                                                                    spec_out.scale_range):
        raise OverlappingSpecs(f"{spec_in} and {spec_out} share confound parameters")


def apply_confound(image, translation=(0.0, 0.0), scale: float = 1.0, canvas=None) -> np.ndarray:
    """Place ``image`` scaled by ``scale`` about its center and shifted by (dx, dy) on a canvas.

    Resampling is bilinear; intensities are divided by scale**2 and the
    result rescaled so the total intensity equals the input's. dx moves
    along columns, dy along rows.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    H, W = canvas if canvas is not None else (h, w)
    dx, dy = float(translation[0]), float(translation[1])
    if not scale > 0:
        raise ValueError("scale must be positive")
    total = img.sum()
    # mass that would land outside the canvas
    if total > 0:
        rows, cols = np.nonzero(img > 0)
        py = scale * (rows - (h - 1) / 2.0) + dy + (H - 1) / 2.0
        px = scale * (cols - (w - 1) / 2.0) + dx + (W - 1) / 2.0
        half = 0.5 * scale
        inside = (px - half >= -0.5) & (px + half <= W - 0.5) & (py - half >= -0.5) & (py + half <= H - 0.5)
        lost = img[rows[~inside], cols[~inside]].sum() / total
        if lost > CLIP_TOLERANCE:
            raise SupportClipped(f"{100 * lost:.2f}% of the mass leaves the {H}x{W} canvas")
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    src_r = (yy - (H - 1) / 2.0 - dy) / scale + (h - 1) / 2.0
    src_c = (xx - (W - 1) / 2.0 - dx) / scale + (w - 1) / 2.0
    out = ndimage.map_coordinates(img, [src_r, src_c], order=1, mode="constant", cval=0.0)
    out = np.clip(out, 0.0, None) / scale ** 2
    got = out.sum()
    if got > 0 and total > 0:
        out *= total / got
    return out


def generate_synthetic_dataset(templates, spec: ConfoundSpec, n_per_class: int, canvas=None) -> LabeledImageSet:
    """n_per_class confounded copies of each template; template k is class k."""
    images, labels = [], []
    for k, tpl in enumerate(templates):
        rng = np.random.default_rng([spec.rng_seed, k])
        for _ in range(n_per_class):
            dx, dy, a = spec.draw(rng)
            images.append(apply_confound(tpl, (dx, dy), a, canvas))
            labels.append(k)
    return LabeledImageSet(np.stack(images), np.asarray(labels), len(templates))


def confound_dataset(data: LabeledImageSet, spec: ConfoundSpec, canvas, stream: int = 0) -> LabeledImageSet:
    """Apply one random confound to every image (Affine-MNIST style).

    Image i draws from a stream keyed by (seed, stream, source index), so a
    subset confounded on its own matches the same rows of the full set.
    """
    src = data.source_indices if data.source_indices is not None else np.arange(len(data))
    out = np.empty((len(data),) + tuple(canvas))
    for i, img in enumerate(data.images):
        rng = np.random.default_rng([spec.rng_seed, stream, int(src[i])])
        dx, dy, a = spec.draw(rng)
        out[i] = apply_confound(img, (dx, dy), a, canvas)
    return LabeledImageSet(out, data.labels.copy(), data.n_classes, source_indices=data.source_indices)


def make_templates(n_classes: int, shape=(64, 64), seed: int = 0, blobs=(2, 4), spread=0.12, sd=(1.5, 4.0)):
    """Random Gaussian-blob templates, one per class, each a distinct arrangement near the center."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy -= (h - 1) / 2.0
    xx -= (w - 1) / 2.0
    out = []
    for k in range(n_classes):
        rng = np.random.default_rng([seed, k])
        img = np.zeros(shape)
        for _ in range(rng.integers(blobs[0], blobs[1] + 1)):
            cx, cy = rng.uniform(-spread, spread, 2) * np.array([w, h])
            sx, sy = rng.uniform(*sd, 2)
            img += rng.uniform(0.5, 1.0) * np.exp(-0.5 * (((xx - cx) / sx) ** 2 + ((yy - cy) / sy) ** 2))
        out.append(img / img.max())
    return out


@dataclass(frozen=True)
class SplitPlan:
    sizes_per_class: tuple = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096)
    repeats: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes_per_class)
        if not sizes or sizes[0] < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"sizes must be positive and strictly increasing, got {sizes}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        object.__setattr__(self, "sizes_per_class", sizes)


def split_indices(labels, n_classes: int, size: int, repeat: int, rng_seed: int) -> np.ndarray:
    """``size`` indices per class, drawn without replacement from a stream keyed by (seed, size, repeat)."""
    rng = np.random.default_rng([rng_seed, size, repeat])
    picks = []
    for k in range(n_classes):
        pool = np.flatnonzero(labels == k)
        if pool.size < size:
            raise InsufficientSamples(f"class {k} has {pool.size} samples, {size} requested")
        picks.append(rng.choice(pool, size, replace=False))
    return np.concatenate(picks)


def sample_splits(data: LabeledImageSet, plan: SplitPlan):
    """Yield (train subset, repeat index) for every size in the plan and every repeat."""
    counts = np.bincount(data.labels, minlength=data.n_classes)
    if counts.size == 0 or counts.min() < plan.sizes_per_class[-1]:
        k = int(np.argmin(counts))
        raise InsufficientSamples(f"class {k} has {counts[k]} samples, plan needs {plan.sizes_per_class[-1]}")
    for size in plan.sizes_per_class:
        for rep in range(plan.repeats):
            idx = split_indices(data.labels, data.n_classes, size, rep, plan.rng_seed)
            yield data.subset(idx), rep
