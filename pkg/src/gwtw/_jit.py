"""Backend switch for the hot kernels.

Kernels are written once in the numba-compatible subset of Python/numpy.
By default they are compiled with ``numba.njit``. Setting ``GWTW_DISABLE_NUMBA=1``
(or running without numba installed) leaves them as plain Python over numpy
arrays, which gives bit-identical results, just much slower.
"""
import functools
import os

import numpy as np

_flag = os.environ.get("GWTW_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba
except ImportError:
    numba = None

JIT_ENABLED = numba is not None
BACKEND = "numba" if JIT_ENABLED else "numpy"


def njit(fn):
    if JIT_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)

    # uint64 wraparound is intended in the RNG; numpy scalars warn about it
    @functools.wraps(fn)
    def wrapper(*args):
        with np.errstate(over="ignore"):
            return fn(*args)

    wrapper.py_func = fn
    return wrapper
