"""The EM-test statistic.

For each initial proportion ``pi`` the two component parameters are fitted
with the mixing proportion frozen at ``(pi, 1 - pi)``; ``K`` penalised EM
iterations then update all parameters, and twice the gain in penalised
log-likelihood over the null is recorded. The statistic is the maximum
over the ``pi`` values.

All fitting happens on data standardised by the null MLE. The penalty is
scale-equivariant, so the statistic is unchanged and location-scale
invariance holds to the accuracy of the null fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _core
from ._optim import maximize, succeeded
from .calibration import LimitLaw, limit_law, p_value
from .errors import ConfigurationError, DomainError, NumericalError
from .geometry import LimitCase
from .kernels import Kernel, Theta
from .nullfit import NullFit, as_series, fit_null, loglik
from .penalty import PenaltyConfig, a_n_formula, p_alpha, p_sigma, resolve_a_n

MIN_N = 10
# (q_lo, q_hi) sample-quantile pairs for the two component locations
START_QUANTILES = (
    (0.25, 0.75), (0.75, 0.25),
    (0.10, 0.50), (0.90, 0.50),
    (0.50, 0.10), (0.50, 0.90),
    (0.50, 0.50),
)
START_SCALES = (0.5, 1.0)


@dataclass(frozen=True)
class MixingDistribution:
    """alpha1 {theta1} + (1 - alpha1) {theta2}."""

    alpha1: float
    theta1: Theta
    theta2: Theta

    def __post_init__(self):
        if not 0.0 <= self.alpha1 <= 1.0:
            raise DomainError(f"alpha1 must lie in [0, 1], got {self.alpha1}")

    @property
    def alpha2(self) -> float:
        return 1.0 - self.alpha1

    @classmethod
    def from_params(cls, p: NDArray) -> "MixingDistribution":
        a1 = 1.0 / (1.0 + math.exp(-p[4])) if p[4] > -700 else 0.0
        return cls(a1, Theta(float(p[0]), math.exp(p[1])), Theta(float(p[2]), math.exp(p[3])))

    def params(self) -> NDArray:
        a = self.alpha1
        eta = math.log(a) - math.log1p(-a) if 0 < a < 1 else math.copysign(800.0, a - 0.5)
        return np.array([self.theta1.mu, math.log(self.theta1.sigma),
                         self.theta2.mu, math.log(self.theta2.sigma), eta])

    def affine(self, loc: float, scale: float) -> "MixingDistribution":
        """The mixing distribution of ``loc + scale * X``."""
        return MixingDistribution(
            self.alpha1,
            Theta(loc + scale * self.theta1.mu, scale * self.theta1.sigma),
            Theta(loc + scale * self.theta2.mu, scale * self.theta2.sigma),
        )

    def density(self, kernel: Kernel, x) -> NDArray:
        x = np.ascontiguousarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, th in ((self.alpha1, self.theta1), (self.alpha2, self.theta2)):
            if a > 0:
                out += a * np.exp(_core.logpdf_array(x, kernel.code, kernel._dof, th.mu, th.sigma))
        return out

    def sample(self, kernel: Kernel, n: int, rng: np.random.Generator) -> NDArray:
        from .kernels import _draw
        first = rng.random(n) < self.alpha1
        z = _draw(kernel, rng, n)
        mu = np.where(first, self.theta1.mu, self.theta2.mu)
        sigma = np.where(first, self.theta1.sigma, self.theta2.sigma)
        return mu + sigma * z

    def to_dict(self) -> dict:
        return {"alpha1": self.alpha1, "alpha2": self.alpha2,
                "theta1": {"mu": self.theta1.mu, "sigma": self.theta1.sigma},
                "theta2": {"mu": self.theta2.mu, "sigma": self.theta2.sigma}}


@dataclass(frozen=True)
class EmConfig:
    pis: tuple[float, ...] = (0.1, 0.3, 0.5)
    K: int = 3
    a_n: float | str | None = None  # None or "auto": empirical formula
    starts: int | None = None  # cap on Step-1 starts; None uses all

    def __post_init__(self):
        pis = tuple(float(p) for p in self.pis)
        object.__setattr__(self, "pis", pis)
        if not pis or any(not 0 < p <= 0.5 for p in pis):
            raise ConfigurationError(f"every pi must lie in (0, 0.5], got {pis}")
        if 0.5 not in pis:
            raise ConfigurationError("pis must include 0.5")
        if self.K < 1:
            raise ConfigurationError("K must be at least 1")
        if self.starts is not None and self.starts < 1:
            raise ConfigurationError("starts must be positive")


@dataclass(frozen=True)
class PiTrack:
    """Result of one initial proportion: M^(K)(pi), the fitted G and the
    penalised log-likelihood after Step 1 and after each EM iteration."""

    pi: float
    M: float
    fit: MixingDistribution
    trace: tuple[float, ...]
    trace_null: float = 0.0

    @property
    def M_by_iteration(self) -> tuple[float, ...]:
        return tuple(2.0 * (v - self.trace_null) for v in self.trace)


@dataclass(frozen=True)
class EmTestResult:
    statistic: float
    per_pi: tuple[PiTrack, ...]
    null_fit: NullFit
    p_value: float | None
    limit_case: LimitCase | None
    a_n: float
    K: int

    @property
    def fit(self) -> MixingDistribution:
        """Fitted G of the track attaining the maximum."""
        return max(self.per_pi, key=lambda t: t.M).fit


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def penalized_loglik(kernel: Kernel, data, G: MixingDistribution, cfg: PenaltyConfig) -> float:
    """l_n(G) + p(alpha1) + p_n(sigma1) + p_n(sigma2).

    The proportion penalty enters once: p(alpha1) = p(alpha2) = log(1 - |alpha1 - alpha2|).
    """
    x = as_series(data)
    return _pen_value(kernel, x, G.params(), cfg.a_n, cfg.sigma_hat ** 2)


def _pen_value(kernel: Kernel, x: NDArray, p: NDArray, a: float, s2hat: float) -> float:
    ll = _core.mixture_loglik(x, kernel.code, kernel._dof, p)
    a1 = 1.0 / (1.0 + math.exp(-p[4]))
    cfg = PenaltyConfig(a, math.sqrt(s2hat))
    return (ll + p_alpha(a1)
            + p_sigma(math.exp(p[1]), cfg) + p_sigma(math.exp(p[3]), cfg))


def e_step(kernel: Kernel, G: MixingDistribution, data) -> NDArray:
    """Posterior probability that each observation came from component 1."""
    x = as_series(data)
    return _core.posterior(x, kernel.code, kernel._dof, G.params())


def m_step_alpha(weight_sum: float, n: int) -> float:
    """Maximise S log a + (n - S) log(1 - a) + p(a) over a.

    The penalty is log(2a) below 0.5 and log(2(1 - a)) above, so each half
    has a closed-form stationary point, (S + 1)/(n + 1) and S/(n + 1); the
    better clipped candidate wins, with ties going to 0.5.
    """
    if n <= 0:
        raise DomainError("n must be positive")
    if not -1e-9 <= weight_sum <= n + 1e-9:
        raise DomainError("weight_sum must lie in [0, n]")
    s = min(max(weight_sum, 0.0), float(n))
    lower = min((s + 1.0) / (n + 1.0), 0.5)
    upper = max(s / (n + 1.0), 0.5)

    def obj(a):
        return (s * math.log(a) if s > 0 else 0.0) + \
            ((n - s) * math.log1p(-a) if n - s > 0 else 0.0) + p_alpha(a)

    fl, fu = obj(lower), obj(upper)
    if abs(fl - fu) <= 1e-12 * (1.0 + abs(fl)):
        return 0.5 if 0.5 in (lower, upper) else lower
    return lower if fl > fu else upper


def _component_step(kernel, x, w, start, a, s2hat):
    p, f, status = maximize(_core.MODE_COMPONENT, x, kernel, start, w=w, a=a, s2hat=s2hat)
    if not (succeeded(status) or status == _core.MAXITER) or not math.isfinite(f):
        raise NumericalError(f"component M-step failed (status {status})")
    return p


def m_step_component(kernel: Kernel, data, weights, cfg: PenaltyConfig,
                     start: Theta | None = None) -> Theta:
    """argmax over theta of sum w_i log f(x_i; theta) + p_n(sigma)."""
    x = as_series(data)
    w = np.ascontiguousarray(weights, dtype=float)
    if w.shape != x.shape or np.any(w < 0):
        raise DomainError("weights must be nonnegative and match the data")
    total = w.sum()
    if total <= 0:
        raise DomainError("weights sum to zero")
    if start is None:
        mu = float(w @ x / total)
        sd = math.sqrt(max(float(w @ (x - mu) ** 2 / total), 1e-12 * cfg.sigma_hat ** 2))
        start = Theta(mu, sd)
    p = _component_step(kernel, x, w, [start.mu, math.log(start.sigma)],
                        cfg.a_n, cfg.sigma_hat ** 2)
    return Theta(float(p[0]), math.exp(p[1]))


def _starts(x: NDArray, sigma_hat: float, null_mu: float, limit: int | None):
    q = np.quantile(x, sorted({v for pair in START_QUANTILES for v in pair}))
    qmap = dict(zip(sorted({v for pair in START_QUANTILES for v in pair}), q))
    out = [(null_mu, sigma_hat, null_mu, sigma_hat)]
    for s in START_SCALES:
        for lo, hi in START_QUANTILES:
            out.append((qmap[lo], s * sigma_hat, qmap[hi], s * sigma_hat))
    return out if limit is None else out[:limit]


def _initial_pair(kernel, x, pi, a, s2hat, null_mu, starts_limit):
    eta = _logit(pi)
    best_p, best_f = None, -math.inf
    failures = []
    for m1, s1, m2, s2 in _starts(x, math.sqrt(s2hat), null_mu, starts_limit):
        p0 = np.array([m1, math.log(s1), m2, math.log(s2), eta])
        p, f, status = maximize(_core.MODE_FIXED_ALPHA, x, kernel, p0, a=a, s2hat=s2hat)
        if not math.isfinite(f):
            failures.append((m1, s1, m2, s2, status))
            continue
        if f > best_f:
            best_p, best_f = p, f
    if best_p is None:
        raise NumericalError(f"every Step-1 start failed for pi={pi}: {failures}")
    return best_p


def initial_pair_fit(kernel: Kernel, data, pi: float, cfg: PenaltyConfig,
                     null: NullFit | None = None, starts: int | None = None) -> tuple[Theta, Theta]:
    """Fit both component parameters with the proportions frozen at (pi, 1 - pi).

    Multi-start damped Newton from the null fit and from sample-quantile
    location pairs crossed with scale multipliers {0.5, 1} of sigma_hat;
    the best local optimum is returned.
    """
    if not 0 < pi <= 0.5:
        raise DomainError("pi must lie in (0, 0.5]")
    x = as_series(data, 2)
    if null is None:
        null = fit_null(kernel, x, cfg.a_n)
    p = _initial_pair(kernel, x, pi, cfg.a_n, cfg.sigma_hat ** 2, null.mu_hat, starts)
    G = MixingDistribution.from_params(p)
    return G.theta1, G.theta2


def _em_track(kernel, z, pi, K, a, starts_limit):
    """One pi track on standardised data (null MLE = (0, 1))."""
    n = z.size
    p = _initial_pair(kernel, z, pi, a, 1.0, 0.0, starts_limit)
    trace = [_pen_value(kernel, z, p, a, 1.0)]
    for _ in range(K):
        w = _core.posterior(z, kernel.code, kernel._dof, p)
        s = float(w.sum())
        alpha = m_step_alpha(s, n)
        q = p.copy()
        q[4] = _logit(alpha)
        if s > 0:
            q[0:2] = _component_step(kernel, z, w, p[0:2], a, 1.0)
        if n - s > 0:
            q[2:4] = _component_step(kernel, z, 1.0 - w, p[2:4], a, 1.0)
        p = q
        trace.append(_pen_value(kernel, z, p, a, 1.0))
    return p, trace


def em_statistic(kernel: Kernel, data, config: EmConfig | None = None,
                 law: LimitLaw | None = None, with_p_value: bool = True) -> EmTestResult:
    """Compute EM_n^(K) and, optionally, its limiting-law p-value.

    Parameters
    ----------
    kernel
        Component family.
    data
        At least 10 observations.
    config
        Initial proportions, iteration count and penalty strength.
    law
        Calibration to use; defaults to the kernel's limiting law.
    with_p_value
        Skip calibration entirely when False (simulation loops).
    """
    config = config or EmConfig()
    x = as_series(data, MIN_N)
    a = resolve_a_n(config.a_n, kernel, x.size)
    null = fit_null(kernel, x, a)
    z = (x - null.mu_hat) / null.sigma_hat
    null_value = loglik(kernel, z, 0.0, 1.0) - 2.0 * a

    tracks = []
    for pi in config.pis:
        p, trace = _em_track(kernel, z, pi, config.K, a, config.starts)
        G = MixingDistribution.from_params(p).affine(null.mu_hat, null.sigma_hat)
        tracks.append(PiTrack(pi=pi, M=2.0 * (trace[-1] - null_value), fit=G,
                              trace=tuple(trace), trace_null=null_value))
    stat = max(t.M for t in tracks)

    pval, case = None, None
    if with_p_value:
        law = law or limit_law(kernel)
        pval, case = p_value(law, stat), law.case
    return EmTestResult(statistic=stat, per_pi=tuple(tracks), null_fit=null,
                        p_value=pval, limit_case=case, a_n=a, K=config.K)
