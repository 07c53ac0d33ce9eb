"""Numba switch.

Set ``BAYESBRITTLE_NO_NUMBA=1`` before import to run every kernel as plain
Python over numpy arrays.  The fallback is slow but exercises identical code.
"""
import os

USE_NUMBA = os.environ.get("BAYESBRITTLE_NO_NUMBA", "").strip().lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    def kernel(func):
        return _njit(cache=True, nogil=True)(func)
else:
    def kernel(func):
        return func
