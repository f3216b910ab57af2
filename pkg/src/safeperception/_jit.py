"""Numba switch.

Hot kernels are decorated with :func:`jit`.  Setting the environment variable
``SAFEPERCEPTION_PURE_NUMPY=1`` (or running without numba installed) turns the
decorator into a no-op, so the same functions execute as plain numpy/Python.
The flag is read once, at import time.
"""

from __future__ import annotations

import os

_FLAG = "SAFEPERCEPTION_PURE_NUMPY"


def _numba_requested() -> bool:
    return os.environ.get(_FLAG, "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

NUMBA_ENABLED = _numba is not None


def jit(fn):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if _numba is None:
        return fn
    return _numba.njit(cache=True)(fn)


def pick(numba_impl, numpy_impl):
    """Choose between a loop kernel (jitted) and a vectorised numpy version."""
    return numba_impl if NUMBA_ENABLED else numpy_impl


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


if _numba is not None:
    import time as _time

    @_numba.njit(cache=True)
    def clock():
        """Wall clock in seconds, callable from jitted code."""
        with _numba.objmode(t="float64"):
            t = _time.perf_counter()
        return t

else:
    import time as _time

    clock = _time.perf_counter
