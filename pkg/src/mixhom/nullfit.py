"""Maximum likelihood fit of the single-component (null) model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _core
from ._optim import maximize, succeeded
from .errors import DegenerateDataError, DomainError, NumericalError
from .kernels import Kernel
from .penalty import a_n_formula


@dataclass(frozen=True)
class NullFit:
    """Null MLE and the penalised log-likelihood at G = 0.5{theta0} + 0.5{theta0}.

    Since the scale penalty peaks at ``sigma_hat`` and p(0.5) = 0, the
    penalised value is ``loglik - 2 a_n``.
    """

    mu_hat: float
    sigma_hat: float
    loglik: float
    penalized_loglik: float
    a_n: float


def as_series(data, min_size: int = 1) -> np.ndarray:
    x = np.ascontiguousarray(data, dtype=float).ravel()
    if x.size < min_size:
        raise DomainError(f"need at least {min_size} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    return x


def loglik(kernel: Kernel, x: np.ndarray, mu: float, sigma: float) -> float:
    return float(_core.logpdf_array(x, kernel.code, kernel._dof, mu, sigma).sum())


def _mle(kernel: Kernel, x: np.ndarray) -> tuple[float, float]:
    mean, sd = float(x.mean()), float(x.std())
    if kernel.family == "normal":
        return mean, sd
    # fit on standardised data so the answer is equivariant by construction
    z = (x - mean) / sd
    ones = np.ones_like(z)
    p, f, status = maximize(_core.MODE_COMPONENT, z, kernel, [0.0, 0.0], w=ones)
    if not (succeeded(status) and math.isfinite(f)):
        def neg(q):
            v = -loglik(kernel, z, q[0], math.exp(q[1]))
            return v if math.isfinite(v) else 1e300

        res = optimize.minimize(neg, [0.0, 0.0], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if not res.success:
            raise NumericalError(f"null fit for {kernel.name} failed: {res.message}")
        # polish the simplex answer
        p, f, status = maximize(_core.MODE_COMPONENT, z, kernel, res.x, w=ones)
    return mean + sd * float(p[0]), sd * math.exp(p[1])


def fit_null(kernel: Kernel, data, a_n: float | None = None) -> NullFit:
    """Fit (mu, sigma) of the homogeneous model by maximum likelihood.

    Parameters
    ----------
    kernel
        Component family.
    data
        Observations; at least 3 with nonzero spread.
    a_n
        Scale-penalty strength used for ``penalized_loglik``; defaults to the
        empirical formula for this kernel and sample size.
    """
    x = as_series(data, 3)
    if np.ptp(x) == 0:
        raise DegenerateDataError("data are constant")
    mu, sigma = _mle(kernel, x)
    ll = loglik(kernel, x, mu, sigma)
    a = a_n_formula(kernel, x.size) if a_n is None else float(a_n)
    return NullFit(mu_hat=mu, sigma_hat=sigma, loglik=ll,
                   penalized_loglik=ll - 2.0 * a, a_n=a)
