"""Penalised likelihood ratio test used as the comparison baseline.

The full two-component fit maximises l_n(G) + p_n(sigma1) + p_n(sigma2)
with a_n = 1/n and no penalty on the mixing proportion; the statistic is
twice the plain log-likelihood gain over the null MLE. Its null
distribution has no usable limit and is simulated.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _core
from ._optim import maximize
from ._parallel import replicate_map, replicate_seeds
from .emtest import (MIN_N, EmConfig, MixingDistribution, _component_step, _starts,
                     em_statistic)
from .errors import DomainError, NumericalError
from .kernels import Kernel, _draw
from .nullfit import NullFit, as_series, fit_null, loglik

START_ALPHAS = (0.1, 0.3, 0.5)
WARMUP_EM = 4
# extra starts for small, narrow components in either tail
TAIL_ALPHAS = (0.02, 0.06)
TAIL_QUANTILES = (0.02, 0.05, 0.1, 0.9, 0.95, 0.98)
TAIL_SCALES = (0.1, 0.25)


@dataclass(frozen=True)
class FullFit:
    G: MixingDistribution
    objective: float  # penalised, on the scale of the input data
    loglik: float
    trace: tuple[float, ...]  # objective of the winning start, standardised scale


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    full_fit: MixingDistribution
    null_fit: NullFit
    p_value: float | None = None
    null_table: NDArray | None = None


def _objective(kernel, z, p, a):
    ll = _core.mixture_loglik(z, kernel.code, kernel._dof, p)
    pen = 0.0
    for tau in (p[1], p[3]):
        e = math.exp(-2.0 * tau)
        pen -= a * (e + 2.0 * tau)
    return ll + pen, ll


def full_em(kernel: Kernel, z: NDArray, p0: NDArray, a: float, iters: int):
    """Plain EM on the penalised full-model objective (unit null scale).

    Returns the final parameters and the objective after each iteration,
    starting with the value at ``p0``.
    """
    p = np.array(p0, dtype=float)
    trace = [_objective(kernel, z, p, a)[0]]
    n = z.size
    for _ in range(iters):
        w = _core.posterior(z, kernel.code, kernel._dof, p)
        s = float(w.sum())
        if not 0 < s < n:
            break
        q = p.copy()
        alpha = min(max(s / n, 1e-12), 1 - 1e-12)
        q[4] = math.log(alpha) - math.log1p(-alpha)
        q[0:2] = _component_step(kernel, z, w, p[0:2], a, 1.0)
        q[2:4] = _component_step(kernel, z, 1.0 - w, p[2:4], a, 1.0)
        value = _objective(kernel, z, q, a)[0]
        if not value >= trace[-1] - 1e-8:
            break
        p = q
        trace.append(value)
    return p, trace


def _start_points(z: NDArray):
    """(alpha, mu1, sigma1, mu2, sigma2) starting values on standardised data."""
    for alpha in START_ALPHAS:
        for m1, s1, m2, s2 in _starts(z, 1.0, 0.0, None):
            yield alpha, m1, s1, m2, s2
    for alpha in TAIL_ALPHAS:
        for q in np.quantile(z, TAIL_QUANTILES):
            for s in TAIL_SCALES:
                yield alpha, float(q), s, 0.0, 1.0


def _fit_standardised(kernel: Kernel, z: NDArray, a: float):
    best = None
    for alpha, m1, s1, m2, s2 in _start_points(z):
        eta = math.log(alpha) - math.log1p(-alpha)
        p0 = np.array([m1, math.log(s1), m2, math.log(s2), eta])
        p, trace = full_em(kernel, z, p0, a, WARMUP_EM)
        q, f, status = maximize(_core.MODE_FULL, z, kernel, p, a=a, s2hat=1.0)
        if not math.isfinite(f):
            continue
        if f >= trace[-1]:
            p = q
            trace = trace + [f]
        if best is None or trace[-1] > best[1][-1]:
            best = (p, trace)
    if best is None:
        raise NumericalError("every full-model start failed")
    return best


def fit_full_penalized(kernel: Kernel, data, null: NullFit | None = None) -> FullFit:
    """Penalised MLE of G under the two-component model (a_n = 1/n).

    Each start (proportions {0.1, 0.3, 0.5} crossed with the quantile
    location starts, plus small narrow components at tail quantiles) runs
    a few EM iterations and is then polished by damped Newton on all five
    parameters; the best start wins.
    """
    x = as_series(data, MIN_N)
    null = null or fit_null(kernel, x)
    z = (x - null.mu_hat) / null.sigma_hat
    a = 1.0 / x.size
    p, trace = _fit_standardised(kernel, z, a)
    G = MixingDistribution.from_params(p).affine(null.mu_hat, null.sigma_hat)
    # the penalty is scale-free; only the log-likelihood picks up -n log sigma_hat
    shift = -x.size * math.log(null.sigma_hat)
    obj_z, ll_z = _objective(kernel, z, p, a)
    return FullFit(G=G, objective=obj_z + shift, loglik=ll_z + shift, trace=tuple(trace))


def lrt_statistic(kernel: Kernel, data) -> LrtResult:
    x = as_series(data, MIN_N)
    null = fit_null(kernel, x)
    full = fit_full_penalized(kernel, x, null)
    stat = 2.0 * (full.loglik - null.loglik)
    return LrtResult(statistic=stat, full_fit=full.G, null_fit=null)


def _null_replicate(seq, kernel: Kernel, n: int, statistic: str, config: EmConfig | None):
    x = _draw(kernel, np.random.default_rng(seq), n)
    if statistic == "lrt":
        return lrt_statistic(kernel, x).statistic
    return em_statistic(kernel, x, config, with_p_value=False).statistic


def bootstrap_null(kernel: Kernel, n: int, reps: int, seed=0, statistic: str = "lrt",
                   config: EmConfig | None = None, workers: int = 1) -> NDArray:
    """Sorted finite-sample null table from samples of the standard kernel.

    Location-scale invariance of both statistics makes f0 samples sufficient.
    """
    if reps < 100:
        raise DomainError("reps must be at least 100")
    if statistic not in ("lrt", "em"):
        raise DomainError(f"unknown statistic {statistic!r}")
    func = functools.partial(_null_replicate, kernel=kernel, n=n, statistic=statistic,
                             config=config)
    return np.sort(np.asarray(replicate_map(func, replicate_seeds(seed, reps), workers)))


def table_p_value(table: NDArray, stat: float) -> float:
    """(1 + #{table >= stat}) / (N + 1)."""
    exceed = table.size - np.searchsorted(table, stat, side="left")
    return (1.0 + exceed) / (table.size + 1.0)
