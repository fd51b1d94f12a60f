"""Extended-precision accumulation for sums over clusters.

Sums across clusters feed third and fourth powers into the moment
estimators, where cancellation at large G is a real concern.  On platforms
whose ``long double`` is wider than ``double`` (x86 Linux) we accumulate in
extended precision; elsewhere we fall back to exact compensated summation.
"""

from __future__ import annotations

import math

import numpy as np

_LONGDOUBLE_WIDER = np.finfo(np.longdouble).eps < np.finfo(np.float64).eps


def gsum(a: np.ndarray, axis: int = 0) -> np.ndarray | float:
    """Sum `a` over `axis` with extended-precision accumulation.

    Returns float64 (scalar for 1-D input).
    """
    a = np.asarray(a, dtype=np.float64)
    if _LONGDOUBLE_WIDER:
        out = np.asarray(a.astype(np.longdouble).sum(axis=axis), dtype=np.float64)
    else:
        out = np.apply_along_axis(lambda v: math.fsum(v.tolist()), axis, a)
        out = np.asarray(out, dtype=np.float64)
    if out.ndim == 0:
        return float(out)
    return out


def gmean(a: np.ndarray, axis: int = 0) -> np.ndarray | float:
    """Mean over `axis` computed from `gsum`."""
    n = np.asarray(a).shape[axis]
    return gsum(a, axis=axis) / n
