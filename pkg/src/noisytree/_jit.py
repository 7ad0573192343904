"""JIT switch.

Hot kernels are written once and compiled with numba when available.  Set
``NTS_JIT=0`` to run the very same functions as plain Python (slow, but handy
for debugging and for checking that compiled and interpreted runs agree).
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

JIT_ENABLED: bool = _numba is not None and os.environ.get("NTS_JIT", "1") != "0"


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or the identity decorator."""
    if JIT_ENABLED:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


if JIT_ENABLED:
    prange = _numba.prange
    u64 = np.uint64
else:
    prange = range
    u64 = int


def set_threads(n: int | None) -> int:
    """Cap numba's worker pool; returns the count actually in effect."""
    if not JIT_ENABLED:
        return 1
    top = _numba.config.NUMBA_NUM_THREADS
    if n is None:
        env = os.environ.get("NTS_THREADS")
        n = int(env) if env else top
    n = max(1, min(int(n), top))
    _numba.set_num_threads(n)
    return n
