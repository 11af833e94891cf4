"""Time the numba kernels against the pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 28x64,64x180,84x64]

Each size is "<image side>x<angles>". Also times one full R-CDT per image with
each backend, in a subprocess so the RCDT_NO_NUMBA switch takes effect.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from rcdtns import kernels
from rcdtns.grids import default_projection_grid

END_TO_END = """
import timeit, numpy as np
from rcdtns import kernels
from rcdtns.grids import default_projection_grid
from rcdtns.transforms import rcdt_features
rng = np.random.default_rng(0)
imgs = rng.random((8, {side}, {side})) ** 3
p = default_projection_grid({side}, {side}, {angles})
rcdt_features(imgs[:1], p)
t = min(timeit.repeat(lambda: rcdt_features(imgs, p), number=1, repeat={repeat})) / len(imgs)
print(kernels.BACKEND, t)
"""


def inputs(side, n_angles, rng):
    p = default_projection_grid(side, side, n_angles)
    t = p.t_grid.points
    s = np.linspace(t[0], t[-1], 2 * p.m - 1)
    img = rng.random((side, side))
    c, sn = np.cos(p.thetas), np.sin(p.thetas)
    filt = rng.standard_normal((p.m, p.n))
    F = np.cumsum(rng.random((p.m, p.n)), axis=0)
    F /= F[-1]
    q = (np.arange(p.m) + 0.5) / p.m
    return {
        "radon_project": (img, 1.0, t, s, c, sn),
        "backproject": (filt, t[0], p.t_grid.spacing, c, sn, side, side, 1.0),
        "interp_columns": (q, F, t),
    }


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="28x64,64x180,84x64")
    args = ap.parse_args()
    if kernels.numba_impl is None:
        sys.exit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':16s} {'size':>8s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for size in args.sizes.split(","):
        side, n_angles = (int(v) for v in size.split("x"))
        for name, a in inputs(side, n_angles, rng).items():
            fast, slow = getattr(kernels.numba_impl, name), getattr(kernels.numpy_impl, name)
            fast(*a)  # compile
            t_np, t_nb = best(slow, a, args.repeat), best(fast, a, args.repeat)
            print(f"{name:16s} {size:>8s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.1f}")
    print()
    print(f"{'rcdt per image':16s} {'size':>8s} {'backend':>10s} {'ms':>10s}")
    for size in args.sizes.split(","):
        side, n_angles = (int(v) for v in size.split("x"))
        code = END_TO_END.format(side=side, angles=n_angles, repeat=args.repeat)
        for flag in ("0", "1"):
            env = dict(os.environ, RCDT_NO_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            backend, t = out.stdout.split()
            print(f"{'':16s} {size:>8s} {backend:>10s} {1e3 * float(t):10.3f}")


if __name__ == "__main__":
    main()
