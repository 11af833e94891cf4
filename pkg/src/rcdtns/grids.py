"""Sampling grids, normalized densities and the reference density."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroImage, CountMismatch

DEFAULT_EPSILON = 1e-8
MASS_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if int(self.n_points) < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty interval [{self.x_min}, {self.x_max}]")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


def trapz_mass(values: np.ndarray, spacing: float, axis: int = 0) -> np.ndarray:
    """Trapezoid integral of samples on a regular grid."""
    v = np.asarray(values, dtype=np.float64)
    return spacing * (v.sum(axis=axis) - 0.5 * (np.take(v, 0, axis=axis) + np.take(v, -1, axis=axis)))


def cumulative_trapz(values: np.ndarray, spacing: float) -> np.ndarray:
    """Cumulative trapezoid integral along axis 0, starting at 0."""
    v = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(v)
    np.cumsum(0.5 * spacing * (v[1:] + v[:-1]), axis=0, out=out[1:])
    return out


@dataclass(frozen=True)
class Density1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"values shape {v.shape} does not match grid of {self.grid.n_points} points")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and nonnegative")
        mass = self.mass
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"density mass {mass!r} is not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(trapz_mass(np.asarray(self.values, dtype=np.float64), self.grid.spacing))

    def cdf(self) -> np.ndarray:
        F = cumulative_trapz(self.values, self.grid.spacing)
        return F / F[-1]


@dataclass(frozen=True)
class Density2D:
    values: np.ndarray
    pixel_spacing: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or min(v.shape) < 1:
            raise ValueError(f"expected a 2D array, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and nonnegative")
        mass = float(v.sum()) * self.pixel_spacing ** 2
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"image mass {mass!r} is not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates (x along columns, y along rows), origin at the image center."""
        return pixel_coordinates(self.height, self.width, self.pixel_spacing)

    def centroid(self) -> np.ndarray:
        x, y = self.coordinates()
        area = self.pixel_spacing ** 2
        return np.array([(self.values.sum(axis=0) * x).sum() * area,
                         (self.values.sum(axis=1) * y).sum() * area])


def pixel_coordinates(height: int, width: int, pixel_spacing: float = 1.0):
    x = (np.arange(width) - (width - 1) / 2.0) * pixel_spacing
    y = (np.arange(height) - (height - 1) / 2.0) * pixel_spacing
    return x, y


@dataclass(frozen=True)
class ProjectionGrid:
    """Offset axis t and projection angles in [0, pi).

    ``image_shape`` and ``pixel_spacing`` describe the image the grid was
    sized for; back-projection rebuilds an image of that shape.
    """

    t_grid: Grid1D
    thetas: np.ndarray
    image_shape: tuple[int, int] | None = None
    pixel_spacing: float = 1.0

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=np.float64)
        if th.ndim != 1 or th.size < 1:
            raise ValueError("need at least one angle")
        if th[0] != 0.0 or np.any(np.diff(th) <= 0) or th[-1] >= np.pi:
            raise ValueError("angles must start at 0, increase strictly and stay below pi")
        if not math.isclose(-self.t_grid.x_min, self.t_grid.x_max, rel_tol=1e-12):
            raise ValueError("t grid must be symmetric about 0")
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        if self.image_shape is not None:
            object.__setattr__(self, "image_shape", (int(self.image_shape[0]), int(self.image_shape[1])))

    @property
    def m(self) -> int:
        return self.t_grid.n_points

    @property
    def n(self) -> int:
        return self.thetas.size

    @property
    def size(self) -> int:
        return self.m * self.n

    def covers(self, height: int, width: int, pixel_spacing: float = 1.0) -> bool:
        half_diag = 0.5 * math.hypot(height, width) * pixel_spacing
        return self.t_grid.x_max >= half_diag * (1 - 1e-12)


@dataclass
class LabeledImageSet:
    images: np.ndarray
    labels: np.ndarray
    n_classes: int | None = None
    source_indices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.images, (list, tuple)):
            imgs = np.stack([np.asarray(im, dtype=np.float64) for im in self.images]) if len(self.images) else np.zeros((0, 1, 1))
        else:
            imgs = np.asarray(self.images)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if imgs.shape[0] != labels.shape[0]:
            raise CountMismatch(f"{imgs.shape[0]} images but {labels.shape[0]} labels")
        if self.n_classes is None:
            self.n_classes = int(labels.max()) + 1 if labels.size else 0
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in 0..{self.n_classes - 1}")
        self.images = imgs
        self.labels = labels

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, indices) -> "LabeledImageSet":
        idx = np.asarray(indices, dtype=np.int64)
        src = idx if self.source_indices is None else np.asarray(self.source_indices)[idx]
        return LabeledImageSet(self.images[idx], self.labels[idx], self.n_classes, source_indices=src)

    def class_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)


def normalize_to_density2d(raw, epsilon: float = DEFAULT_EPSILON, pixel_spacing: float = 1.0) -> Density2D:
    """Clip negatives, add ``epsilon * max(raw)`` everywhere and rescale to unit mass."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a = np.asarray(raw, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {a.shape}")
    peak = a.max() if a.size else 0.0
    if not peak > 0:
        raise AllZeroImage("image has no strictly positive pixel")
    v = np.clip(a, 0.0, None) + epsilon * peak
    v /= v.sum() * pixel_spacing ** 2
    return Density2D(v, pixel_spacing)


def normalize_to_density1d(values, grid: Grid1D, epsilon: float = DEFAULT_EPSILON) -> Density1D:
    a = np.asarray(values, dtype=np.float64)
    peak = a.max() if a.size else 0.0
    if not peak > 0:
        raise AllZeroImage("signal has no strictly positive sample")
    v = np.clip(a, 0.0, None) + epsilon * peak
    v /= trapz_mass(v, grid.spacing)
    return Density1D(grid, v)


def make_uniform_reference1d(grid: Grid1D) -> Density1D:
    return Density1D(grid, np.full(grid.n_points, 1.0 / grid.length))


def default_projection_grid(height: int, width: int, n_angles: int = 180,
                            pixel_spacing: float = 1.0) -> ProjectionGrid:
    if n_angles < 1:
        raise ValueError("n_angles must be >= 1")
    diag = math.hypot(height, width)
    m = max(2, math.ceil(diag))
    half = 0.5 * diag * pixel_spacing
    thetas = np.arange(n_angles) * (np.pi / n_angles)
    return ProjectionGrid(Grid1D(m, -half, half), thetas, (height, width), pixel_spacing)
