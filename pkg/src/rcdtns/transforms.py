"""CDT, Radon and R-CDT transforms (forward and inverse) and the distances they embed."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AllZeroImage, DimensionMismatch, GridTooSmall, NonMonotoneCdf, NonMonotoneInput, TooFewAngles
from .grids import (DEFAULT_EPSILON, Density1D, Density2D, Grid1D, ProjectionGrid, cumulative_trapz,
                    normalize_to_density2d, trapz_mass)

# relative size of the step used to break ties in a CDT column
MONOTONE_JITTER = 1e-12
MIN_FBP_ANGLES = 16


@dataclass(frozen=True)
class CdtFunction:
    grid: Grid1D
    values: np.ndarray


@dataclass(frozen=True)
class Sinogram:
    proj: ProjectionGrid
    values: np.ndarray

    def masses(self) -> np.ndarray:
        return trapz_mass(self.values, self.proj.t_grid.spacing, axis=0)


@dataclass(frozen=True)
class RcdtField:
    """R-CDT samples on the (t, theta) grid, shape (m, n)."""

    proj: ProjectionGrid
    values: np.ndarray

    def flatten(self) -> np.ndarray:
        # angle-major: each angle's column is contiguous
        return np.ravel(self.values, order="F")

    @classmethod
    def from_flat(cls, proj: ProjectionGrid, vec) -> "RcdtField":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != proj.size:
            raise DimensionMismatch(f"vector of length {vec.size} does not fit a {proj.m}x{proj.n} grid")
        return cls(proj, vec.reshape((proj.m, proj.n), order="F"))


def enforce_increasing(values: np.ndarray, spacing: float) -> np.ndarray:
    """Lift ties and drops along axis 0 so every column is strictly increasing."""
    v = np.array(values, dtype=np.float64)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    bad = np.any(np.diff(v, axis=0) <= 0, axis=0)
    if np.any(bad):
        step = MONOTONE_JITTER * spacing
        ramp = step * np.arange(v.shape[0])[:, None]
        fixed = np.maximum.accumulate(v[:, bad] - ramp, axis=0) + ramp
        v[:, bad] = fixed
    return v[:, 0] if squeeze else v


def _cdfs(columns: np.ndarray, spacing: float) -> np.ndarray:
    F = cumulative_trapz(columns, spacing)
    total = F[-1]
    if np.any(total <= 0):
        raise NonMonotoneCdf("a column has no mass")
    F = F / total
    if np.any(np.diff(F, axis=0) <= 0):
        raise NonMonotoneCdf("cumulative distribution is not strictly increasing; the positivity floor is missing")
    return F


def cell_edges(grid: Grid1D) -> np.ndarray:
    """Boundaries of the m cells centred on the grid nodes."""
    h = grid.spacing
    return np.linspace(grid.x_min - 0.5 * h, grid.x_max + 0.5 * h, grid.n_points + 1)


def _cell_cdfs(columns: np.ndarray) -> np.ndarray:
    """CDF at the cell edges of the piecewise-constant density that equals column[i] on cell i."""
    c = np.asarray(columns, dtype=np.float64)
    if np.any(c <= 0):
        raise NonMonotoneCdf("density has non-positive samples; the positivity floor is missing")
    F = np.zeros((c.shape[0] + 1, c.shape[1]))
    np.cumsum(c, axis=0, out=F[1:])
    F /= F[-1]
    return F


def reference_levels(ref: Density1D) -> np.ndarray:
    """Reference CDF at the grid nodes under the same cell model.

    Every level lies strictly inside (0, 1); for a uniform reference on m
    nodes the levels are (i + 1/2)/m. Quantiles at these levels never sit
    on the support edge, so translating or dilating a signal moves every
    CDT sample.
    """
    r = np.asarray(ref.values, dtype=np.float64)
    c = np.cumsum(r) - 0.5 * r
    return c / r.sum()


def cdt_columns(columns: np.ndarray, source: Grid1D, ref: Density1D) -> np.ndarray:
    """CDT of every column of ``columns`` (densities on ``source``) against ``ref``."""
    F_s = _cell_cdfs(columns)
    shat = kernels.interp_columns(reference_levels(ref), np.ascontiguousarray(F_s), cell_edges(source))
    return enforce_increasing(shat, source.spacing)


def cdt_forward(s: Density1D, r: Density1D) -> CdtFunction:
    """Strictly increasing map with F_s(shat(x)) = F_r(x), sampled on r's grid."""
    shat = cdt_columns(np.asarray(s.values)[:, None], s.grid, r)[:, 0]
    return CdtFunction(r.grid, shat)


def _check_increasing(values: np.ndarray):
    if np.any(np.diff(values, axis=0) <= 0):
        raise NonMonotoneInput("transport map is not strictly increasing")


def inverse_cdt_columns(shat: np.ndarray, ref: Density1D, out_grid: Grid1D) -> np.ndarray:
    """Rebuild densities on ``out_grid`` from CDT columns.

    s = (d shat^-1/dx) r(shat^-1) is the derivative of F_r(shat^-1(x)),
    taken by central differences of that CDF at the output nodes.
    """
    shat = np.asarray(shat, dtype=np.float64)
    _check_increasing(shat)
    q = reference_levels(ref)
    if shat.shape[0] < 2:
        raise NonMonotoneInput("need at least two samples per column")
    # levels 0 and 1 sit where the end segments, extended, reach them
    lo = shat[0] - q[0] * (shat[1] - shat[0]) / (q[1] - q[0])
    hi = shat[-1] + (1.0 - q[-1]) * (shat[-1] - shat[-2]) / (q[-1] - q[-2])
    knots = np.vstack([np.minimum(lo, shat[0])[None, :], shat, np.maximum(hi, shat[-1])[None, :]])
    levels = np.concatenate([[0.0], q, [1.0]])
    F_s = kernels.interp_columns(out_grid.points, np.ascontiguousarray(knots), levels)
    dens = np.gradient(F_s, out_grid.spacing, axis=0)
    # the central difference of F carries +h^2/6 s''; take it back out
    curv = np.zeros_like(dens)
    curv[1:-1] = dens[2:] - 2.0 * dens[1:-1] + dens[:-2]
    dens -= curv / 6.0
    np.clip(dens, 0.0, None, out=dens)
    mass = trapz_mass(dens, out_grid.spacing, axis=0)
    if np.any(mass <= 0):
        raise AllZeroImage("reconstructed signal has no mass on the output grid")
    return dens / mass


def cdt_inverse(shat: CdtFunction, r: Density1D, out_grid: Grid1D | None = None) -> Density1D:
    grid = out_grid or r.grid
    dens = inverse_cdt_columns(np.asarray(shat.values)[:, None], r, grid)[:, 0]
    return Density1D(grid, dens)


END_CELL_LEVELS = 10


def graded_quantiles(F_r: np.ndarray, levels: int = END_CELL_LEVELS) -> np.ndarray:
    """Reference quantiles F_r(x_i) of the interior nodes plus geometric nodes in both end cells."""
    inner = F_r[1:-1]
    halvings = 0.5 ** np.arange(levels, 0, -1)
    lower = inner[0] * halvings
    upper = 1.0 - (1.0 - inner[-1]) * halvings[::-1]
    return np.concatenate([lower, inner, upper])


def transport_cost(cols1: np.ndarray, cols2: np.ndarray, source: Grid1D, ref: Density1D) -> np.ndarray:
    """Squared weighted L2 distance between the CDTs of matching columns.

    The integral of (shat1 - shat2)^2 r dx is taken in the variable
    q = F_r(x), where it reads int_0^1 (F1^-1 - F2^-1)^2 dq. Interior
    nodes are the CDT samples themselves. The end cells get extra nodes:
    there F^-1 runs off into the tails and the grid endpoints carry no
    information about the signal.
    """
    F1 = _cdfs(cols1, source.spacing)
    F2 = _cdfs(cols2, source.spacing)
    q = graded_quantiles(ref.cdf())
    x = source.points
    d2 = (kernels.interp_columns(q, np.ascontiguousarray(F1), x)
          - kernels.interp_columns(q, np.ascontiguousarray(F2), x)) ** 2
    dq = np.diff(q)[:, None]
    body = (0.5 * dq * (d2[1:] + d2[:-1])).sum(axis=0)
    return body + d2[0] * q[0] + d2[-1] * (1.0 - q[-1])


def w2_distance(s1: Density1D, s2: Density1D, r: Density1D) -> float:
    """2-Wasserstein distance, computed as the r-weighted L2 norm between CDTs."""
    if s1.grid != s2.grid:
        raise DimensionMismatch("densities must share a grid")
    cost = transport_cost(np.asarray(s1.values)[:, None], np.asarray(s2.values)[:, None], s1.grid, r)
    return float(np.sqrt(max(cost[0], 0.0)))


def _s_samples(t_grid: Grid1D) -> np.ndarray:
    # two line samples per t spacing
    return np.linspace(t_grid.x_min, t_grid.x_max, 2 * t_grid.n_points - 1)


def radon_forward(s: Density2D, proj: ProjectionGrid, renormalize: bool = True) -> Sinogram:
    """Rotate-and-sum Radon transform; column j is the projection at thetas[j].

    With ``renormalize`` each column is rescaled to unit mass, which makes
    the per-angle masses equal exactly.
    """
    if not proj.covers(s.height, s.width, s.pixel_spacing):
        raise GridTooSmall(f"t range +-{proj.t_grid.x_max:g} does not cover a {s.height}x{s.width} image")
    tg = proj.t_grid
    raw = kernels.radon_project(np.ascontiguousarray(s.values), float(s.pixel_spacing), tg.points,
                                _s_samples(tg), np.cos(proj.thetas), np.sin(proj.thetas))
    if renormalize:
        mass = trapz_mass(raw, tg.spacing, axis=0)
        if np.any(mass <= 0):
            raise AllZeroImage("a projection has no mass")
        raw = raw / mass
    return Sinogram(proj, raw)


def ramp_filter(n_samples: int, spacing: float) -> np.ndarray:
    """Frequency response of the band-limited ramp |xi| for a zero-padded FFT of length n_samples."""
    lag = np.fft.fftfreq(n_samples) * n_samples
    h = np.zeros(n_samples)
    h[0] = 1.0 / (4.0 * spacing ** 2)
    odd = (np.abs(lag) % 2) == 1
    h[odd] = -1.0 / (np.pi ** 2 * lag[odd] ** 2 * spacing ** 2)
    return np.real(np.fft.fft(h)) * spacing


def filter_projections(values: np.ndarray, spacing: float) -> np.ndarray:
    m = values.shape[0]
    n_fft = max(64, 1 << int(np.ceil(np.log2(2 * m))))
    H = ramp_filter(n_fft, spacing)
    spec = np.fft.fft(values, n=n_fft, axis=0)
    return np.real(np.fft.ifft(spec * H[:, None], axis=0))[:m]


def radon_inverse(sg: Sinogram, shape: tuple[int, int] | None = None) -> Density2D:
    """Filtered back-projection, clipped at zero and renormalized to unit mass."""
    proj = sg.proj
    if proj.n < MIN_FBP_ANGLES:
        warnings.warn(TooFewAngles(f"only {proj.n} angles; reconstruction will streak"), stacklevel=2)
    shape = shape or proj.image_shape
    if shape is None:
        side = int(np.floor(proj.t_grid.length / np.sqrt(2.0) / proj.pixel_spacing))
        shape = (side, side)
    tg = proj.t_grid
    filtered = filter_projections(np.asarray(sg.values, dtype=np.float64), tg.spacing)
    img = kernels.backproject(np.ascontiguousarray(filtered), tg.x_min, tg.spacing, np.cos(proj.thetas),
                              np.sin(proj.thetas), int(shape[0]), int(shape[1]), float(proj.pixel_spacing))
    np.clip(img, 0.0, None, out=img)
    total = img.sum() * proj.pixel_spacing ** 2
    if not total > 0:
        raise AllZeroImage("back-projection is zero everywhere")
    return Density2D(img / total, proj.pixel_spacing)


def _check_reference(ref1d: Density1D, proj: ProjectionGrid):
    if ref1d.grid != proj.t_grid:
        raise DimensionMismatch("reference density must live on the projection t grid")


def floor_columns(values: np.ndarray, spacing: float, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Add ``epsilon * max`` to each column and renormalize it to unit mass."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, None)
    peak = v.max(axis=0)
    if np.any(peak <= 0):
        raise AllZeroImage("a projection is zero everywhere")
    v = v + epsilon * peak
    return v / trapz_mass(v, spacing, axis=0)


def rcdt_forward(s: Density2D, ref1d: Density1D, proj: ProjectionGrid,
                 epsilon: float = DEFAULT_EPSILON) -> RcdtField:
    """Radon transform, then the CDT of every projection along t."""
    _check_reference(ref1d, proj)
    sg = radon_forward(s, proj)
    cols = floor_columns(sg.values, proj.t_grid.spacing, epsilon)
    return RcdtField(proj, cdt_columns(cols, proj.t_grid, ref1d))


def rcdt_inverse(field: RcdtField, ref1d: Density1D, shape: tuple[int, int] | None = None) -> Density2D:
    _check_reference(ref1d, field.proj)
    proj = field.proj
    sino = inverse_cdt_columns(field.values, ref1d, proj.t_grid)
    return radon_inverse(Sinogram(proj, sino), shape)


def sw2_distance(s1: Density2D, s2: Density2D, ref1d: Density1D, proj: ProjectionGrid,
                 epsilon: float = DEFAULT_EPSILON) -> float:
    """Sliced 2-Wasserstein distance, angles averaged uniformly over [0, pi)."""
    _check_reference(ref1d, proj)
    spacing = proj.t_grid.spacing
    c1 = floor_columns(radon_forward(s1, proj).values, spacing, epsilon)
    c2 = floor_columns(radon_forward(s2, proj).values, spacing, epsilon)
    per_angle = transport_cost(c1, c2, proj.t_grid, ref1d)
    return float(np.sqrt(max(per_angle.mean(), 0.0)))


def translation_spanning_vectors(proj: ProjectionGrid) -> tuple[np.ndarray, np.ndarray]:
    """cos(theta) and sin(theta), constant along t, flattened like RcdtField."""
    ones = np.ones((proj.m, 1))
    u1 = RcdtField(proj, ones * np.cos(proj.thetas)[None, :]).flatten()
    u2 = RcdtField(proj, ones * np.sin(proj.thetas)[None, :]).flatten()
    return u1, u2


def rcdt_features(images, proj: ProjectionGrid, epsilon: float = DEFAULT_EPSILON,
                  ref1d: Density1D | None = None) -> np.ndarray:
    """Normalize raw images and return their flattened R-CDTs as rows of an (N, m*n) matrix."""
    from .grids import make_uniform_reference1d

    ref1d = ref1d or make_uniform_reference1d(proj.t_grid)
    images = list(images) if not isinstance(images, np.ndarray) else images
    out = np.empty((len(images), proj.size))
    for i, raw in enumerate(images):
        dens = normalize_to_density2d(raw, epsilon, proj.pixel_spacing)
        out[i] = rcdt_forward(dens, ref1d, proj, epsilon).flatten()
    return out
