"""Bootstrap kernel backends.

The hot inner loops of the bootstrap methods live behind two functions,
`pairs_abs_tstats` and `wcb_abs_tstats`.  A compiled Cython extension is
used when it was built; otherwise a vectorized numpy implementation takes
over.  Set CLUSTERCRIT_KERNELS=python (or =compiled) to force a backend,
or call `set_backend` from code.  Both backends agree to floating-point
tolerance; `benchmarks/bench_backends.py` compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np

from . import reference

try:
    from . import _fast

    HAVE_COMPILED = True
except ImportError:  # extension not built
    _fast = None
    HAVE_COMPILED = False

_VALID = ("auto", "compiled", "python")


def _resolve(name: str):
    if name not in _VALID:
        raise ValueError(f"unknown kernel backend {name!r}; choose from {_VALID}")
    if name == "python":
        return reference
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels requested but the extension is not built")
        return _fast
    return _fast if HAVE_COMPILED else reference


_impl = _resolve(os.environ.get("CLUSTERCRIT_KERNELS", "auto").lower())


def active_backend() -> str:
    """Name of the backend currently dispatched to."""
    return "compiled" if _impl is _fast and _fast is not None else "python"


def set_backend(name: str) -> None:
    """Switch backend ('auto', 'compiled', or 'python')."""
    global _impl
    _impl = _resolve(name)


def pairs_abs_tstats(gram, xty, lam, center, idx, rcond=1e-10):
    return _impl.pairs_abs_tstats(
        np.ascontiguousarray(gram, dtype=np.float64),
        np.ascontiguousarray(xty, dtype=np.float64),
        np.ascontiguousarray(lam, dtype=np.float64),
        float(center),
        np.ascontiguousarray(idx, dtype=np.int64),
        float(rcond),
    )


def wcb_abs_tstats(proj, dscore, a_inv, cscore, lam, signs):
    return _impl.wcb_abs_tstats(
        np.ascontiguousarray(proj, dtype=np.float64),
        np.ascontiguousarray(dscore, dtype=np.float64),
        np.ascontiguousarray(a_inv, dtype=np.float64),
        np.ascontiguousarray(cscore, dtype=np.float64),
        np.ascontiguousarray(lam, dtype=np.float64),
        np.ascontiguousarray(signs, dtype=np.float64),
    )
