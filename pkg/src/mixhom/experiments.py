"""Size, power and tuning-parameter experiments."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ._parallel import replicate_map, replicate_seeds
from .calibration import LimitLaw, limit_law
from .emtest import EmConfig, MixingDistribution, em_statistic
from .errors import ConfigurationError, DomainError
from .kernels import Kernel, Theta, _draw
from .lrt import lrt_statistic

# Logit discrepancy y at q = 0.05 from the 4 x 4 factorial size experiment:
# (a_n, n, logistic, extreme, student-t (nu = 10), normal)
SIZE_DESIGN = (
    (0.3, 50, -0.1200, 0.0270, -0.0234, -0.1778),
    (0.4, 50, -0.2761, -0.1129, -0.2207, -0.4395),
    (0.5, 50, -0.4115, -0.2897, -0.3664, -0.5845),
    (0.6, 50, -0.5845, -0.3993, -0.5525, -0.7525),
    (0.3, 100, 0.0413, 0.1253, 0.0146, -0.0106),
    (0.4, 100, -0.0561, 0.0188, -0.1083, -0.1557),
    (0.5, 100, -0.1485, -0.0990, -0.2104, -0.2815),
    (0.6, 100, -0.2520, -0.1952, -0.3175, -0.3783),
    (0.3, 300, 0.1328, 0.1197, 0.1804, 0.0291),
    (0.4, 300, 0.0753, 0.0733, 0.1366, -0.0256),
    (0.5, 300, 0.0063, 0.0188, 0.0909, -0.0853),
    (0.6, 300, -0.0539, -0.0299, 0.0393, -0.1509),
    (0.3, 500, 0.0929, 0.1328, 0.0454, 0.0126),
    (0.4, 500, 0.0534, 0.0851, 0.0146, -0.0213),
    (0.5, 500, 0.0209, 0.0413, -0.0170, -0.0650),
    (0.6, 500, -0.0213, 0.0000, -0.0517, -0.1037),
)
_DESIGN_COLUMN = {"logistic": 2, "extreme_value": 3, "student_t": 4, "normal": 5}


def _G(a1, mu2, s2):
    return MixingDistribution(a1, Theta(0.0, 1.0), Theta(mu2, s2))


# Alternative models of the power study, with the published powers (%) at
# (n=200 EM, n=200 LRT, n=400 EM, n=400 LRT).
ALTERNATIVES = {
    "logistic": {
        "L1": (_G(0.5, 3.0, 1.0), (63.0, 34.1, 92.0, 68.3)),
        "L2": (_G(0.5, 2.0, 2.0), (71.0, 50.5, 95.5, 83.3)),
        "L3": (_G(0.5, 0.0, 2.3), (57.7, 40.6, 88.3, 70.4)),
        "L4": (_G(0.8, 3.0, 1.0), (46.3, 25.6, 78.7, 52.7)),
        "L5": (_G(0.8, 2.0, 2.0), (69.7, 54.1, 95.3, 86.0)),
        "L6": (_G(0.8, 0.0, 2.3), (58.1, 46.6, 88.2, 74.7)),
        "L7": (_G(0.95, 5.0, 1.0), (45.3, 37.2, 78.5, 68.8)),
        "L8": (_G(0.95, 3.5, 2.0), (33.1, 33.1, 60.7, 54.6)),
        "L9": (_G(0.95, 0.0, 3.5), (52.0, 57.4, 79.7, 79.9)),
    },
    "extreme_value": {
        "E1": (_G(0.5, 1.8, 1.0), (69.5, 42.9, 94.5, 77.9)),
        "E2": (_G(0.5, 1.3, 1.2), (64.3, 39.2, 92.5, 73.1)),
        "E3": (_G(0.5, 0.0, 2.0), (57.8, 39.6, 87.6, 70.7)),
        "E4": (_G(0.8, 1.4, 1.0), (70.8, 47.5, 95.2, 82.1)),
        "E5": (_G(0.8, 1.0, 1.2), (60.1, 40.8, 89.7, 73.1)),
        "E6": (_G(0.8, 0.0, 2.0), (67.3, 54.0, 92.9, 83.0)),
        "E7": (_G(0.95, 1.4, 1.0), (37.9, 28.5, 66.2, 52.7)),
        "E8": (_G(0.95, 1.0, 1.2), (25.9, 20.4, 45.2, 35.8)),
        "E9": (_G(0.95, 0.0, 2.0), (26.8, 25.4, 44.4, 40.7)),
    },
    "student_t": {
        "T1": (_G(0.5, 1.8, 1.0), (49.1, 21.9, 81.0, 45.7)),
        "T2": (_G(0.5, 2.0, 1.5), (71.9, 42.5, 95.6, 77.3)),
        "T3": (_G(0.5, 0.0, 2.5), (63.3, 42.3, 92.8, 75.9)),
        "T4": (_G(0.8, 2.5, 1.0), (88.3, 69.2, 99.5, 96.4)),
        "T5": (_G(0.8, 2.0, 1.5), (71.2, 45.9, 95.8, 81.3)),
        "T6": (_G(0.8, 0.0, 2.5), (59.6, 44.7, 90.1, 73.9)),
        "T7": (_G(0.95, 3.0, 1.0), (30.7, 21.1, 58.7, 42.3)),
        "T8": (_G(0.95, 3.0, 2.0), (40.1, 35.6, 69.7, 62.2)),
        "T9": (_G(0.95, 0.0, 3.5), (27.9, 35.0, 51.9, 54.0)),
    },
}


def discrepancy(q_hat: float, q: float) -> float:
    """logit(q_hat) - logit(q)."""
    for v in (q_hat, q):
        if not 0 < v < 1:
            raise DomainError(f"rates must lie in (0, 1), got {v}")
    return math.log(q_hat / (1 - q_hat)) - math.log(q / (1 - q))


@dataclass(frozen=True)
class DesignRow:
    a_n: float
    n: int
    kernel: Kernel
    y: float
    q_hat: float
    q: float

    @classmethod
    def from_discrepancy(cls, a_n, n, kernel, y, q=0.05) -> "DesignRow":
        lq = math.log(q / (1 - q)) + y
        return cls(a_n=a_n, n=n, kernel=kernel, y=y, q_hat=1.0 / (1.0 + math.exp(-lq)), q=q)


def design_rows(kernel: Kernel) -> list[DesignRow]:
    """The published 16-run size design for ``kernel`` (t uses its nu = 10 column)."""
    col = _DESIGN_COLUMN[kernel.family]
    return [DesignRow.from_discrepancy(r[0], r[1], kernel, r[col]) for r in SIZE_DESIGN]


@dataclass(frozen=True)
class TuningModel:
    """a_n(n) = 0.2 + exp(c0 + c1 / n), the root of the fitted y-regression."""

    c0: float
    c1: float
    beta: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def a_n(self, n: int) -> float:
        return 0.2 + math.exp(self.c0 + self.c1 / n)


def fit_tuning_model(rows: list[DesignRow]) -> TuningModel:
    """OLS of y on (1, 1/n, log(a_n - 0.2)); solve y_hat = 0 for a_n."""
    if len(rows) < 4:
        raise ConfigurationError("need at least 4 design rows")
    if any(r.a_n <= 0.2 for r in rows):
        raise ConfigurationError("design rows need a_n > 0.2")
    n = np.array([r.n for r in rows], dtype=float)
    a = np.array([r.a_n for r in rows], dtype=float)
    y = np.array([r.y for r in rows], dtype=float)
    X = np.column_stack([np.ones_like(n), 1.0 / n, np.log(a - 0.2)])
    if np.unique(n).size < 2 or np.unique(a).size < 2 or np.linalg.matrix_rank(X) < 3:
        raise ConfigurationError("singular tuning design")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    if beta[2] == 0:
        raise ConfigurationError("log(a_n - 0.2) has zero coefficient; cannot solve for a_n")
    return TuningModel(c0=-beta[0] / beta[2], c1=-beta[1] / beta[2], beta=tuple(beta))


def _em_replicate(seq, kernel, n, config, G):
    rng = np.random.default_rng(seq)
    x = _draw(kernel, rng, n) if G is None else G.sample(kernel, n, rng)
    return em_statistic(kernel, x, config, with_p_value=False).statistic


def _lrt_replicate(seq, kernel, n, G):
    rng = np.random.default_rng(seq)
    x = _draw(kernel, rng, n) if G is None else G.sample(kernel, n, rng)
    return lrt_statistic(kernel, x).statistic


def simulate_statistics(kernel: Kernel, n: int, reps: int, seed=0, G=None,
                        statistic: str = "em", config: EmConfig | None = None,
                        workers: int = 1) -> NDArray:
    """Statistics on ``reps`` samples from f0 (``G`` None) or from mixture ``G``."""
    if statistic == "em":
        func = functools.partial(_em_replicate, kernel=kernel, n=n, config=config, G=G)
    elif statistic == "lrt":
        func = functools.partial(_lrt_replicate, kernel=kernel, n=n, G=G)
    else:
        raise ConfigurationError(f"unknown statistic {statistic!r}")
    return np.asarray(replicate_map(func, replicate_seeds(seed, reps), workers))


@dataclass(frozen=True)
class Type1Result:
    kernel: Kernel
    n: int
    reps: int
    rates: dict
    critical_values: dict
    statistics: NDArray


def type1_experiment(kernel: Kernel, n: int, reps: int, levels=(0.10, 0.05, 0.01),
                     config: EmConfig | None = None, seed=0, law: LimitLaw | None = None,
                     workers: int = 1) -> Type1Result:
    """Rejection rates of the EM-test under f0 at limiting-law critical values."""
    if reps < 100:
        raise DomainError("reps must be at least 100")
    law = law or limit_law(kernel)
    stats = simulate_statistics(kernel, n, reps, seed, None, "em", config, workers)
    crit = {lv: law.critical_value(lv) for lv in levels}
    rates = {lv: float(np.mean(stats > c)) for lv, c in crit.items()}
    return Type1Result(kernel, n, reps, rates, crit, stats)


@dataclass(frozen=True)
class PowerResult:
    power: float
    critical_value: float
    statistics: NDArray


def critical_value(source, level: float) -> float:
    """Upper ``level`` critical value from a sorted null table or a LimitLaw."""
    if isinstance(source, LimitLaw):
        return source.critical_value(level)
    table = np.asarray(source, dtype=float)
    if table.size == 0:
        raise DomainError("empty null table")
    return float(np.quantile(table, 1.0 - level))


def power_experiment(kernel: Kernel, altG: MixingDistribution, n: int, reps: int,
                     level: float, critical_source, seed=0, statistic: str = "em",
                     config: EmConfig | None = None, workers: int = 1) -> PowerResult:
    """Fraction of samples from ``altG`` whose statistic exceeds the critical value."""
    crit = critical_value(critical_source, level)
    stats = simulate_statistics(kernel, n, reps, seed, altG, statistic, config, workers)
    return PowerResult(float(np.mean(stats > crit)), crit, stats)


def tuning_experiment(kernel: Kernel, a_values, n_values, reps: int, q: float = 0.05,
                      seed=0, law: LimitLaw | None = None, workers: int = 1) -> list[DesignRow]:
    """Run the a_n x n factorial and return one DesignRow per cell."""
    law = law or limit_law(kernel)
    crit = law.critical_value(q)
    rows = []
    for i, n in enumerate(n_values):
        for j, a in enumerate(a_values):
            cfg = EmConfig(a_n=float(a))
            stats = simulate_statistics(kernel, n, reps, [seed, i, j], None, "em", cfg, workers)
            # keep q_hat off the boundary so the logit stays finite
            k = int(np.sum(stats > crit))
            q_hat = min(max(k, 0.5), reps - 0.5) / reps
            rows.append(DesignRow(a_n=float(a), n=int(n), kernel=kernel,
                                  y=discrepancy(q_hat, q), q_hat=q_hat, q=q))
    return rows
