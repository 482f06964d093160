"""Numba switch for the hot loops.

Kernels are always decorated with :func:`njit` when numba is importable;
``USE_NUMBA`` only decides which path the dispatchers in :mod:`agc.kernels`
call. Set ``AGC_NUMBA=0`` in the environment to force the numpy fallback.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("AGC_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off")


def njit(*args, **kwargs):
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda fn: fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
