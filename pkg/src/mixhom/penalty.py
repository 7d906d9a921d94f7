"""Penalty functions on the mixing proportion and on component scales."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, DomainError
from .kernels import Kernel

# a_n = 0.2 + exp(c0 + c1 / n), fitted per family from the size experiments
A_N_COEFFICIENTS = {
    "logistic": (-0.959, -119.899),
    "extreme_value": (-0.986, -77.677),
    "student_t": (-1.032, -103.737),
    "normal": (-1.410, -114.433),
}
A_N_FLOOR = 0.2


@dataclass(frozen=True)
class PenaltyConfig:
    """Strength ``a_n`` of the scale penalty and the null scale MLE it centres on."""

    a_n: float
    sigma_hat: float

    def __post_init__(self):
        if not self.a_n >= 0:
            raise DomainError(f"a_n must be nonnegative, got {self.a_n}")
        if not self.sigma_hat > 0:
            raise DomainError(f"sigma_hat must be positive, got {self.sigma_hat}")


def p_alpha(alpha: float) -> float:
    """log(1 - |1 - 2 alpha|); zero at 0.5, diverging at 0 and 1."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    # log(2 min(a, 1 - a)) avoids the cancellation in 1 - |1 - 2a| near 0
    return math.log(2.0 * min(alpha, 1.0 - alpha))


def p_sigma(sigma: float, cfg: PenaltyConfig) -> float:
    """-a_n {sigma_hat^2/sigma^2 + log(sigma^2/sigma_hat^2)}."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    r = (cfg.sigma_hat / sigma) ** 2
    return -cfg.a_n * (r - math.log(r))


def a_n_formula(kernel: Kernel, n: int) -> float:
    if n < 1:
        raise DomainError("n must be positive")
    try:
        c0, c1 = A_N_COEFFICIENTS[kernel.family]
    except KeyError:
        raise ConfigurationError(f"no a_n formula for {kernel.family}") from None
    return A_N_FLOOR + math.exp(c0 + c1 / n)


def resolve_a_n(value, kernel: Kernel, n: int) -> float:
    """Interpret a CLI/config ``a_n`` setting: ``"auto"``/None or a number."""
    if value is None or (isinstance(value, str) and value.strip().lower() == "auto"):
        return a_n_formula(kernel, n)
    try:
        a = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"a_n must be a number or 'auto', got {value!r}") from None
    if not a > 0:
        raise ConfigurationError(f"a_n must be positive, got {a}")
    return a
