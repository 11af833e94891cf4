"""Hot loops of the transforms.

The numba versions are used when numba imports and ``RCDT_NO_NUMBA`` is
unset (or "0"); otherwise the pure-numpy versions are used. Both live side
by side so tests and benchmarks can call either directly.
"""
import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is optional
    numba_impl = None


def _want_numba():
    flag = os.environ.get("RCDT_NO_NUMBA", "").strip().lower()
    return numba_impl is not None and flag in ("", "0", "false", "no")


if _want_numba():
    BACKEND = "numba"
    _impl = numba_impl
else:
    BACKEND = "numpy"
    _impl = numpy_impl

radon_project = _impl.radon_project
backproject = _impl.backproject
interp_columns = _impl.interp_columns

__all__ = ["BACKEND", "radon_project", "backproject", "interp_columns", "numpy_impl", "numba_impl"]
