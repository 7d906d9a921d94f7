from __future__ import annotations

import numpy as np

from . import _core
from .kernels import Kernel

NEWTON_TOL = 1e-14
NEWTON_MAXIT = 200

_NO_WEIGHTS = np.empty(0)


def maximize(mode: int, x: np.ndarray, kernel: Kernel, p0, *, w=None, a=0.0,
             s2hat=1.0, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Run the compiled damped Newton ascent; returns (params, value, status)."""
    p0 = np.ascontiguousarray(p0, dtype=float)
    w = _NO_WEIGHTS if w is None else np.ascontiguousarray(w, dtype=float)
    p, f, status, _ = _core.newton_max(mode, x, w, kernel.code, kernel._dof, p0,
                                       float(a), float(s2hat), maxit, tol)
    return p, f, status


def succeeded(status: int) -> bool:
    return status in (_core.CONVERGED, _core.STALLED)
