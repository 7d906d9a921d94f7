"""Location-scale kernel families.

A kernel is the standardised density ``f0`` of a location-scale family
``f(x; mu, sigma) = f0((x - mu) / sigma) / sigma``. Four families are
supported: logistic, type-I extreme value (density ``exp{x - exp(x)}``),
Student-t with known degrees of freedom, and normal. All have their mode at 0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _core
from .errors import ConfigurationError, DomainError

FAMILIES = ("logistic", "extreme_value", "student_t", "normal")

_CODES = {
    "logistic": _core.LOGISTIC,
    "extreme_value": _core.EXTREME,
    "student_t": _core.STUDENT_T,
    "normal": _core.NORMAL,
}


@dataclass(frozen=True)
class Kernel:
    """A location-scale family descriptor.

    Parameters
    ----------
    family
        One of ``"logistic"``, ``"extreme_value"``, ``"student_t"``, ``"normal"``.
    dof
        Degrees of freedom; required for (and only for) ``student_t``. It is
        treated as known and never estimated.
    """

    family: str
    dof: float | None = None

    def __post_init__(self):
        if self.family not in _CODES:
            raise ConfigurationError(f"unknown kernel family {self.family!r}")
        if self.family == "student_t":
            if self.dof is None or not math.isfinite(self.dof) or self.dof <= 2:
                raise ConfigurationError("student_t needs finite dof > 2")
            object.__setattr__(self, "dof", float(self.dof))
        elif self.dof is not None:
            raise ConfigurationError(f"{self.family} takes no dof")

    @classmethod
    def parse(cls, name: str) -> "Kernel":
        """Build a kernel from its CLI name: logistic, extreme, t<dof>, normal."""
        key = name.strip().lower()
        if key in ("logistic", "normal"):
            return cls(key)
        if key in ("extreme", "extreme_value", "gumbel"):
            return cls("extreme_value")
        m = re.fullmatch(r"t(\d+(?:\.\d+)?)", key)
        if m:
            return cls("student_t", float(m.group(1)))
        raise ConfigurationError(f"cannot parse kernel name {name!r}")

    @property
    def name(self) -> str:
        if self.family == "student_t":
            return f"t{self.dof:g}"
        if self.family == "extreme_value":
            return "extreme"
        return self.family

    @property
    def code(self) -> int:
        return _CODES[self.family]

    @property
    def _dof(self) -> float:
        return self.dof if self.dof is not None else 0.0

    def logpdf0(self, z: ArrayLike) -> NDArray:
        """log f0 evaluated elementwise."""
        z = np.asarray(z, dtype=float)
        return _core.logpdf_array(z.ravel(), self.code, self._dof, 0.0, 1.0).reshape(z.shape)

    def pdf0(self, z: ArrayLike) -> NDArray:
        return np.exp(self.logpdf0(z))

    def derivatives(self, z: ArrayLike) -> tuple[NDArray, NDArray]:
        """First and second derivatives of log f0."""
        z = np.asarray(z, dtype=float)
        if self.family == "logistic":
            t = np.tanh(0.5 * z)
            return -t, -0.5 * (1.0 - t * t)
        if self.family == "extreme_value":
            e = np.exp(z)
            return 1.0 - e, -e
        if self.family == "student_t":
            nu = self.dof
            q = nu + z * z
            return -(nu + 1.0) * z / q, -(nu + 1.0) * (nu - z * z) / (q * q)
        return -z, -np.ones_like(z)


@dataclass(frozen=True)
class Theta:
    """Component parameter (location, scale)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise DomainError("theta must be finite")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class ScoreVector:
    """First-derivative ratios ``b1`` and halved second-derivative ratios ``b2``."""

    b1: NDArray
    b2: NDArray

    @property
    def full(self) -> NDArray:
        return np.concatenate([self.b1, self.b2], axis=0)


def log_density(kernel: Kernel, x: ArrayLike, theta: Theta) -> NDArray | float:
    """log f(x; theta) for the given kernel."""
    if theta.sigma <= 0:
        raise DomainError("sigma must be positive")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    out = _core.logpdf_array(xa.ravel(), kernel.code, kernel._dof, theta.mu, theta.sigma)
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def score_arrays(kernel: Kernel, z: ArrayLike) -> NDArray:
    """The 5 x len(z) array of score components at theta0 = (0, 1).

    Rows: d/dmu, d/dsigma, then d2/dmu2, d2/dmu dsigma, d2/dsigma2 each
    divided by 2, all as ratios to the density.
    """
    z = np.asarray(z, dtype=float)
    g1, g2 = kernel.derivatives(z)
    lm = -g1
    ls = -1.0 - z * g1
    lmm = g2
    lms = g1 + z * g2
    lss = 1.0 + z * z * g2 + 2.0 * z * g1
    return np.stack([
        lm,
        ls,
        0.5 * (lmm + lm * lm),
        0.5 * (lms + lm * ls),
        0.5 * (lss + ls * ls),
    ])


def score_vector(kernel: Kernel, x: float) -> ScoreVector:
    if not math.isfinite(x):
        raise DomainError("x must be finite")
    b = score_arrays(kernel, np.array([x]))[:, 0]
    return ScoreVector(b1=b[:2], b2=b[2:])


def sample(kernel: Kernel, n: int, seed=None) -> NDArray:
    """Draw ``n`` values from f0.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1:
        raise DomainError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    return _draw(kernel, rng, n)


def _draw(kernel: Kernel, rng: np.random.Generator, n: int) -> NDArray:
    if kernel.family == "logistic":
        u = rng.random(n)
        return np.log(u) - np.log1p(-u)
    if kernel.family == "extreme_value":
        # F(x) = 1 - exp(-e^x)
        u = rng.random(n)
        return np.log(-np.log1p(-u))
    if kernel.family == "student_t":
        return rng.standard_t(kernel.dof, size=n)
    return rng.standard_normal(n)
