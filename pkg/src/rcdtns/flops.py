"""Analytic floating-point operation counts.

Counts are formula-based, not measured. With an h x w image, m offsets,
n angles, S = 2m - 1 samples along each line and D = m*n:

    normalize      3*h*w                       clip, floor, rescale
    radon          n*m*(14*S + 3)              bilinear sample (14/pt), sum, renormalize
    cdt            n*(6*m + m*(ceil(log2 m) + 4))   cumsum + normalize, search + lerp
    transform      normalize + radon + cdt
    enrichment     8*D*N                       project N samples off span{u1, u2}
    svd(D, N)      4*D*N**2 + 8*N**3           thin SVD, Golub-Van Loan cost model
    distance(d)    2*D*d + 2*D                 B^T s and the two squared norms

    train  = N_total*transform + sum_k [enrichment + svd(D, N_k)]
    test   = transform + sum_k distance(d_k)   per image
"""
from __future__ import annotations

import math
from dataclasses import dataclass

BILINEAR = 14


@dataclass(frozen=True)
class FlopCount:
    train: int
    test_per_image: int
    transform_per_image: int
    svd: int


def normalize_flops(h: int, w: int) -> int:
    return 3 * h * w


def radon_flops(m: int, n: int) -> int:
    return n * m * (BILINEAR * (2 * m - 1) + 3)


def cdt_flops(m: int, n: int) -> int:
    return n * (6 * m + m * (math.ceil(math.log2(max(m, 2))) + 4))


def transform_flops(h: int, w: int, m: int, n: int) -> int:
    return normalize_flops(h, w) + radon_flops(m, n) + cdt_flops(m, n)


def svd_flops(rows: int, cols: int) -> int:
    k = min(rows, cols)
    big = max(rows, cols)
    return 4 * big * k * k + 8 * k ** 3


def distance_flops(D: int, d: int) -> int:
    return 2 * D * d + 2 * D


def count_flops(image_shape, m: int, n: int, n_train_per_class, ranks, enrich: bool = True) -> FlopCount:
    """Train and per-image test counts.

    ``n_train_per_class`` is an int (same for every class) or a per-class
    list; ``ranks`` gives the retained dimension of each class subspace.
    """
    h, w = image_shape
    K = len(ranks)
    counts = [int(n_train_per_class)] * K if isinstance(n_train_per_class, (int, float)) else [int(c) for c in n_train_per_class]
    D = m * n
    tf = transform_flops(h, w, m, n)
    svd = sum(svd_flops(D, c) for c in counts)
    enr = sum(8 * D * c for c in counts) if enrich else 0
    train = sum(counts) * tf + svd + enr
    test = tf + sum(distance_flops(D, d) for d in ranks)
    return FlopCount(train, test, tf, svd)
