"""Numba toggle for the hot kernels.

Set ``SBBETA_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
Kernels receive all of their randomness as pre-drawn arrays, so both paths
produce identical results for the same inputs.
"""
from __future__ import annotations

import os

DISABLE_NUMBA = os.environ.get("SBBETA_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None and not DISABLE_NUMBA


def njit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
