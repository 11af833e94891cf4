"""Nearest-subspace classification in R-CDT space."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClass, DimensionMismatch, MissingClass
from .grids import DEFAULT_EPSILON, LabeledImageSet, ProjectionGrid, default_projection_grid
from .transforms import rcdt_features, translation_spanning_vectors


@dataclass(frozen=True)
class FitConfig:
    n_angles: int = 180
    epsilon: float = DEFAULT_EPSILON
    variance_fraction: float = 0.99
    enrich_translation: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.n_angles < 1:
            raise ValueError("n_angles must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.variance_fraction <= 1:
            raise ValueError("variance_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ClassBasis:
    class_id: int
    basis: np.ndarray
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True)
class Model:
    classes: tuple
    proj: ProjectionGrid
    epsilon: float = DEFAULT_EPSILON
    variance_fraction: float = 0.99
    enrich_translation: bool = True

    def __post_init__(self):
        ids = [c.class_id for c in self.classes]
        if ids != list(range(len(ids))):
            raise ValueError("class ids must be 0..K-1 in order")
        for c in self.classes:
            if c.basis.shape[0] != self.proj.size:
                raise DimensionMismatch(f"class {c.class_id} basis has {c.basis.shape[0]} rows, grid has {self.proj.size}")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def ranks(self) -> list[int]:
        return [c.d for c in self.classes]


@dataclass(frozen=True)
class Prediction:
    label: int
    distances: np.ndarray


def _fix_signs(U: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def _retained_rank(sv: np.ndarray, variance_fraction: float, n_rows: int) -> int:
    if sv.size == 0 or sv[0] <= 0:
        return 0
    tol = sv[0] * max(n_rows, sv.size) * np.finfo(np.float64).eps
    rank = int(np.count_nonzero(sv > tol))
    if variance_fraction >= 1.0:
        return rank
    energy = np.cumsum(sv[:rank] ** 2)
    d = int(np.searchsorted(energy, variance_fraction * energy[-1] * (1 - 1e-12)) + 1)
    return min(d, rank)


def fit_class_subspace(samples, enrich_translation: bool = True, variance_fraction: float = 0.99,
                       proj: ProjectionGrid | None = None, class_id: int = 0) -> ClassBasis:
    """Orthonormal basis of span(samples), optionally enriched with the translation directions.

    ``samples`` holds flattened fields as rows (or a list of RcdtField). The
    translation directions are orthonormalized first and always kept; the
    sample residuals orthogonal to them are truncated to the smallest rank
    capturing ``variance_fraction`` of their energy.
    """
    if not 0 < variance_fraction <= 1:
        raise ValueError("variance_fraction must lie in (0, 1]")
    if len(samples) == 0:
        raise DegenerateClass("no samples")
    if hasattr(samples[0], "flatten") and hasattr(samples[0], "proj"):
        proj = proj or samples[0].proj
        X = np.stack([s.flatten() for s in samples], axis=1)
    else:
        X = np.asarray(samples, dtype=np.float64).T
    if not np.any(np.abs(X) > 0):
        raise DegenerateClass("all samples are zero")
    D = X.shape[0]
    blocks = []
    if enrich_translation:
        if proj is None:
            raise ValueError("translation enrichment needs the projection grid")
        U = np.stack(translation_spanning_vectors(proj), axis=1)
        Q, _ = np.linalg.qr(U)
        Q = _fix_signs(Q)
        X = X - Q @ (Q.T @ X)
        blocks.append(Q)
    Us, sv, _ = np.linalg.svd(X, full_matrices=False)
    d = _retained_rank(sv, variance_fraction, D)
    if d:
        Ud = _fix_signs(Us[:, :d])
        if blocks:
            # scrub the last rounding-level leakage into the translation block
            Ud = Ud - blocks[0] @ (blocks[0].T @ Ud)
            Ud, _ = np.linalg.qr(Ud)
            Ud = _fix_signs(Ud)
        blocks.append(Ud)
    if not blocks:
        raise DegenerateClass("samples span nothing")
    B = np.ascontiguousarray(np.concatenate(blocks, axis=1))
    return ClassBasis(int(class_id), B, sv)


def subspace_distance(shat, basis: ClassBasis) -> float:
    """Squared distance ||s - B B^T s||^2, computed as ||s||^2 - ||B^T s||^2 and floored at 0."""
    s = np.asarray(shat.flatten() if hasattr(shat, "flatten") and hasattr(shat, "proj") else shat, dtype=np.float64)
    if s.shape[0] != basis.basis.shape[0]:
        raise DimensionMismatch(f"vector of length {s.shape[0]} vs basis with {basis.basis.shape[0]} rows")
    c = basis.basis.T @ s
    return max(float(s @ s - c @ c), 0.0)


def distances_batch(features: np.ndarray, model: Model) -> np.ndarray:
    """(N, K) squared distances from each feature row to each class subspace."""
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if F.shape[1] != model.proj.size:
        raise DimensionMismatch(f"features have {F.shape[1]} columns, model expects {model.proj.size}")
    norms = np.einsum("ij,ij->i", F, F)
    out = np.empty((F.shape[0], model.n_classes))
    for k, c in enumerate(model.classes):
        P = F @ c.basis
        out[:, k] = norms - np.einsum("ij,ij->i", P, P)
    np.maximum(out, 0.0, out=out)
    return out


def _transform_chunk(args):
    images, proj, epsilon = args
    return rcdt_features(images, proj, epsilon)


def transform_images(images, proj: ProjectionGrid, epsilon: float = DEFAULT_EPSILON, jobs: int = 1) -> np.ndarray:
    """R-CDT feature rows for a stack of raw images, optionally over a process pool."""
    images = np.asarray(images, dtype=np.float64)
    if jobs <= 1 or len(images) < 2 * jobs:
        return rcdt_features(images, proj, epsilon)
    chunks = np.array_split(np.arange(len(images)), jobs * 4)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(_transform_chunk, [(images[c], proj, epsilon) for c in chunks]))
    return np.concatenate(parts, axis=0)


def fit_features(features: np.ndarray, labels, proj: ProjectionGrid, n_classes: int | None = None,
                 epsilon: float = DEFAULT_EPSILON, variance_fraction: float = 0.99,
                 enrich_translation: bool = True) -> Model:
    """Fit per-class subspaces to precomputed feature rows."""
    labels = np.asarray(labels, dtype=np.int64)
    K = int(n_classes if n_classes is not None else labels.max() + 1)
    classes = []
    for k in range(K):
        rows = features[labels == k]
        if rows.shape[0] == 0:
            raise MissingClass(f"class {k} has no training samples")
        classes.append(fit_class_subspace(rows, enrich_translation, variance_fraction, proj, class_id=k))
    return Model(tuple(classes), proj, epsilon, variance_fraction, enrich_translation)


def fit(train: LabeledImageSet, config: FitConfig = FitConfig()) -> Model:
    """Normalize, transform, group by class and fit one enriched subspace per class."""
    if len(train) == 0:
        raise MissingClass("empty training set")
    h, w = train.images.shape[1:3]
    proj = default_projection_grid(h, w, config.n_angles)
    feats = transform_images(train.images, proj, config.epsilon, config.jobs)
    return fit_features(feats, train.labels, proj, train.n_classes, config.epsilon,
                        config.variance_fraction, config.enrich_translation)


def decide(distances: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, i.e. the lowest class id on ties
    return np.argmin(distances, axis=-1)


def predict_features(features: np.ndarray, model: Model) -> np.ndarray:
    return decide(distances_batch(features, model))


def predict(image, model: Model) -> Prediction:
    img = np.asarray(image, dtype=np.float64)
    if model.proj.image_shape is not None and img.shape != tuple(model.proj.image_shape):
        raise DimensionMismatch(f"image shape {img.shape} but model was trained on {model.proj.image_shape}")
    feat = rcdt_features([img], model.proj, model.epsilon)
    dist = distances_batch(feat, model)[0]
    return Prediction(int(decide(dist)), dist)
