"""numba kernels; see _numpy.py for the reference semantics."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def radon_project(img, pixel_spacing, t, s, cos, sin):
    h, w = img.shape
    ds = s[1] - s[0]
    m = t.size
    ms = s.size
    n = cos.size
    out = np.empty((m, n))
    cr = (h - 1) / 2.0
    cc = (w - 1) / 2.0
    inv = 1.0 / pixel_spacing
    for j in range(n):
        c = cos[j]
        sn = sin[j]
        for i in range(m):
            acc = 0.0
            for k in range(ms):
                col = (t[i] * c - s[k] * sn) * inv + cc
                row = (t[i] * sn + s[k] * c) * inv + cr
                if col <= -1.0 or col >= w or row <= -1.0 or row >= h:
                    continue
                r0 = int(math.floor(row))
                c0 = int(math.floor(col))
                fr = row - r0
                fc = col - c0
                if r0 >= 0:
                    if c0 >= 0:
                        acc += (1.0 - fr) * (1.0 - fc) * img[r0, c0]
                    if c0 + 1 < w:
                        acc += (1.0 - fr) * fc * img[r0, c0 + 1]
                if r0 + 1 < h:
                    if c0 >= 0:
                        acc += fr * (1.0 - fc) * img[r0 + 1, c0]
                    if c0 + 1 < w:
                        acc += fr * fc * img[r0 + 1, c0 + 1]
            out[i, j] = acc * ds
    return out


@njit(cache=True)
def backproject(filtered, t0, dt, cos, sin, height, width, pixel_spacing):
    m, n = filtered.shape
    out = np.zeros((height, width))
    for r in range(height):
        y = (r - (height - 1) / 2.0) * pixel_spacing
        for c in range(width):
            x = (c - (width - 1) / 2.0) * pixel_spacing
            acc = 0.0
            for j in range(n):
                pos = (x * cos[j] + y * sin[j] - t0) / dt
                i0 = int(math.floor(pos))
                f = pos - i0
                if 0 <= i0 < m:
                    acc += (1.0 - f) * filtered[i0, j]
                if 0 <= i0 + 1 < m:
                    acc += f * filtered[i0 + 1, j]
            out[r, c] = acc
    return out * (np.pi / n)


@njit(cache=True)
def interp_columns(q, F, x):
    nq = q.size
    m, n = F.shape
    out = np.empty((nq, n))
    for j in range(n):
        k = 0
        for i in range(nq):
            qi = q[i]
            if qi <= F[0, j]:
                out[i, j] = x[0]
                continue
            if qi >= F[m - 1, j]:
                out[i, j] = x[m - 1]
                continue
            # q is sorted, so the bracket only moves forward
            while F[k + 1, j] < qi:
                k += 1
            while k > 0 and F[k, j] > qi:
                k -= 1
            lo = F[k, j]
            hi = F[k + 1, j]
            if hi > lo:
                out[i, j] = x[k] + (qi - lo) / (hi - lo) * (x[k + 1] - x[k])
            else:
                out[i, j] = x[k]
    return out
