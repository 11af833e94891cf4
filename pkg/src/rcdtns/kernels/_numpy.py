"""Pure-numpy kernels. Same signatures and results as the numba versions."""
import numpy as np


def _bilinear(img, rows, cols):
    h, w = img.shape
    r0 = np.floor(rows)
    c0 = np.floor(cols)
    fr = rows - r0
    fc = cols - c0
    r0 = r0.astype(np.int64)
    c0 = c0.astype(np.int64)
    out = np.zeros(rows.shape)
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        rr = r0 + dr
        okr = (rr >= 0) & (rr < h)
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            cc = c0 + dc
            ok = okr & (cc >= 0) & (cc < w)
            out[ok] += wr[ok] * wc[ok] * img[rr[ok], cc[ok]]
    return out


def radon_project(img, pixel_spacing, t, s, cos, sin):
    """Line integrals of the bilinear interpolant of ``img``.

    For angle j the image is sampled on the rotated lattice
    ``t * xi + s * xi_perp`` and summed over ``s``. Returns an (m, n) array.
    """
    h, w = img.shape
    ds = s[1] - s[0]
    out = np.empty((t.size, cos.size))
    cr = (h - 1) / 2.0
    cc = (w - 1) / 2.0
    for j in range(cos.size):
        x = t[:, None] * cos[j] - s[None, :] * sin[j]
        y = t[:, None] * sin[j] + s[None, :] * cos[j]
        vals = _bilinear(img, y / pixel_spacing + cr, x / pixel_spacing + cc)
        out[:, j] = vals.sum(axis=1) * ds
    return out


def backproject(filtered, t0, dt, cos, sin, height, width, pixel_spacing):
    """Smear each filtered projection back over the image, linear interpolation in t."""
    m, n = filtered.shape
    x = (np.arange(width) - (width - 1) / 2.0) * pixel_spacing
    y = (np.arange(height) - (height - 1) / 2.0) * pixel_spacing
    out = np.zeros((height, width))
    for j in range(n):
        pos = ((x[None, :] * cos[j] + y[:, None] * sin[j]) - t0) / dt
        i0 = np.floor(pos)
        f = pos - i0
        i0 = i0.astype(np.int64)
        col = filtered[:, j]
        ok0 = (i0 >= 0) & (i0 < m)
        ok1 = (i0 + 1 >= 0) & (i0 + 1 < m)
        out[ok0] += (1.0 - f[ok0]) * col[i0[ok0]]
        out[ok1] += f[ok1] * col[i0[ok1] + 1]
    return out * (np.pi / n)


def interp_columns(q, F, x):
    """out[i, j] = linear interpolation at q[i] of the table (F[:, j] -> x)."""
    out = np.empty((q.size, F.shape[1]))
    for j in range(F.shape[1]):
        out[:, j] = np.interp(q, F[:, j], x)
    return out
