"""Independent reference computations used to freeze expected values.

Nothing here touches the package's CDT or Radon code: quantiles come from
closed-form mixture CDFs inverted by bisection, and projections of Gaussian
images are taken analytically.
"""
import numpy as np
from scipy.special import ndtr


class GaussMix1D:
    """Gaussian mixture truncated to [lo, hi] and renormalized."""

    def __init__(self, mu, sd, wt, lo=-1.0, hi=1.0):
        self.mu = np.atleast_1d(np.asarray(mu, float))
        self.sd = np.atleast_1d(np.asarray(sd, float))
        self.wt = np.atleast_1d(np.asarray(wt, float))
        self.wt = self.wt / self.wt.sum()
        self.lo, self.hi = lo, hi
        self._c_lo = self._raw_cdf(np.array([lo]))[0]
        self._c_hi = self._raw_cdf(np.array([hi]))[0]

    @classmethod
    def random(cls, rng, lo=-1.0, hi=1.0, center=0.25, sd=(0.03, 0.1)):
        k = rng.integers(1, 4)
        return cls(rng.uniform(-center, center, k), rng.uniform(*sd, k), rng.dirichlet(np.ones(k)), lo, hi)

    def pdf(self, x):
        x = np.asarray(x, float)[:, None]
        return (self.wt * np.exp(-(x - self.mu) ** 2 / (2 * self.sd ** 2)) / (self.sd * np.sqrt(2 * np.pi))).sum(1)

    def _raw_cdf(self, x):
        return (self.wt * ndtr((np.asarray(x, float)[:, None] - self.mu) / self.sd)).sum(1)

    def cdf(self, x):
        return (self._raw_cdf(x) - self._c_lo) / (self._c_hi - self._c_lo)

    def quantile(self, q, iters=56):
        q = np.asarray(q, float)
        lo = np.full(q.shape, self.lo)
        hi = np.full(q.shape, self.hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def midpoint_quantiles(n=50000):
    return (np.arange(n) + 0.5) / n


def w2_quantile_oracle(a: GaussMix1D, b: GaussMix1D, n=50000):
    q = midpoint_quantiles(n)
    return float(np.sqrt(np.mean((a.quantile(q) - b.quantile(q)) ** 2)))


def gaussian_image(shape, centers, covs, weights, pixel_spacing=1.0):
    """Pixel samples of a 2D Gaussian mixture; origin at the image center, x along columns."""
    h, w = shape
    x = (np.arange(w) - (w - 1) / 2.0) * pixel_spacing
    y = (np.arange(h) - (h - 1) / 2.0) * pixel_spacing
    X, Y = np.meshgrid(x, y)
    img = np.zeros(shape)
    for c, S, wt in zip(centers, covs, weights):
        S = np.asarray(S, float)
        P = np.linalg.inv(S)
        dx, dy = X - c[0], Y - c[1]
        q = P[0, 0] * dx * dx + 2 * P[0, 1] * dx * dy + P[1, 1] * dy * dy
        img += wt * np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(np.linalg.det(S)))
    return img


def random_gaussian_image(rng, shape=(64, 64), n_blobs=(1, 4), spread=0.18, sd=(2.5, 6.0)):
    """Random smooth image whose support sits well inside the frame."""
    h, w = shape
    k = rng.integers(n_blobs[0], n_blobs[1] + 1)
    centers = rng.uniform(-spread, spread, (k, 2)) * np.array([w, h])
    covs = []
    for _ in range(k):
        a, b = rng.uniform(*sd, 2)
        phi = rng.uniform(0, np.pi)
        R = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        covs.append(R @ np.diag([a * a, b * b]) @ R.T)
    weights = rng.dirichlet(np.ones(k))
    return gaussian_image(shape, centers, covs, weights), (centers, covs, weights)


def projected_mixture(params, theta, half_range):
    """Exact Radon projection at angle theta of a 2D Gaussian mixture, as a 1D mixture."""
    centers, covs, weights = params
    xi = np.array([np.cos(theta), np.sin(theta)])
    mu = [float(np.dot(c, xi)) for c in centers]
    sd = [float(np.sqrt(xi @ np.asarray(S) @ xi)) for S in covs]
    return GaussMix1D(mu, sd, weights, -half_range, half_range)


def sw2_analytic_oracle(p1, p2, thetas, half_range, n=20000):
    total = 0.0
    for th in thetas:
        a = projected_mixture(p1, th, half_range)
        b = projected_mixture(p2, th, half_range)
        q = midpoint_quantiles(n)
        total += np.mean((a.quantile(q) - b.quantile(q)) ** 2)
    return float(np.sqrt(total / len(thetas)))


def shift_image(params, dx, dy):
    centers, covs, weights = params
    return ([np.asarray(c) + np.array([dx, dy]) for c in centers], covs, weights)
