"""Kernel dispatch: the compiled extension when available, numpy otherwise.

Set ``ZZB_PURE_PYTHON=1`` to force the numpy implementations.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ZZB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def weighted_map_error(q, t: float, eta: float) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError("q must be a 2-D array (nodes x hypotheses)")
    return _impl.weighted_map_error(q, float(t), float(eta))


def posterior_moments(y, x, logw, lo_idx, hi_idx, eta: float):
    return _impl.posterior_moments(
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(logw, dtype=np.float64),
        np.ascontiguousarray(lo_idx, dtype=np.int64),
        np.ascontiguousarray(hi_idx, dtype=np.int64),
        float(eta),
    )
