"""Covariance of the score vector and classification of the null limit."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from .errors import NumericalError, UnsupportedKernelError
from .kernels import Kernel, score_arrays

EPS_RANK = 1e-6
# case (ii) needs u1 and u3 clearly nonzero; (1, 0, 0) is the normal's pattern
EPS_SIGN = 1e-3
TAIL_RATIO = 1e-14


@dataclass(frozen=True)
class ScoreMatrices:
    B: NDArray
    B11: NDArray
    B12: NDArray
    B22: NDArray
    tildeB22: NDArray

    @classmethod
    def from_B(cls, B: NDArray) -> "ScoreMatrices":
        B = 0.5 * (B + B.T)
        B11, B12, B22 = B[:2, :2], B[:2, 2:], B[2:, 2:]
        tilde = B22 - B12.T @ np.linalg.solve(B11, B12)
        return cls(B=B, B11=B11, B12=B12, B22=B22, tildeB22=0.5 * (tilde + tilde.T))

    @property
    def projection(self) -> NDArray:
        """The 3x2 matrix A with residual score b2 - A b1."""
        return np.linalg.solve(self.B11, self.B12).T


@dataclass(frozen=True)
class LimitCase:
    tag: str  # "CaseI" | "CaseII" | "NormalDegenerate"
    null_eigenvector: NDArray | None = None
    eigenvalues: NDArray | None = None

    @property
    def chi2(self) -> bool:
        return self.tag != "CaseI"


def _tail_point(kernel: Kernel, direction: float) -> float:
    """Smallest |z| (doubling from 1) where f0 drops below TAIL_RATIO * f0(0)."""
    level = np.log(TAIL_RATIO) + float(kernel.logpdf0(0.0))
    r = 1.0
    while float(kernel.logpdf0(direction * r)) > level:
        r *= 2.0
        if r > 1e12:
            raise NumericalError(f"could not bracket the tail of {kernel.name}")
    return r


def _integrate_moments(kernel: Kernel, lo: float, hi: float) -> tuple[NDArray, NDArray]:
    """Integrate f0*b and f0*b b' over [lo, hi] with geometric break points."""
    def breaks(r):
        return np.unique(np.concatenate([[0.0], np.geomspace(0.25, r, 24)]))

    edges = np.unique(np.concatenate([-breaks(-lo)[::-1], breaks(hi)]))

    def integrand(z):
        b = score_arrays(kernel, np.array([z]))[:, 0]
        f = float(kernel.pdf0(z))
        return np.concatenate([b * f, np.outer(b, b).ravel() * f])

    total = np.zeros(30)
    for a, c in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad_vec(integrand, a, c, epsabs=1e-13, epsrel=1e-11)
        if not np.all(np.isfinite(val)):
            raise NumericalError(f"non-finite quadrature on [{a}, {c}] for {kernel.name}")
        total += val
    return total[:5], total[5:].reshape(5, 5)


def score_moments(kernel: Kernel, tol: float = 1e-10) -> tuple[NDArray, NDArray]:
    """Mean vector and second-moment matrix of the score at theta0.

    The range starts where f0 falls below 1e-14 of its mode and doubles
    until the second-moment entries move by less than ``tol``.
    """
    lo, hi = -_tail_point(kernel, -1.0), _tail_point(kernel, 1.0)
    mean, second = _integrate_moments(kernel, lo, hi)
    for _ in range(8):
        lo2, hi2 = 2 * lo, 2 * hi
        if kernel.family == "extreme_value":
            hi2 = hi  # doubly-exponential right tail; already negligible
        mean2, second2 = _integrate_moments(kernel, lo2, hi2)
        if np.max(np.abs(second2 - second)) < tol:
            return mean2, second2
        lo, hi, mean, second = lo2, hi2, mean2, second2
    raise NumericalError(
        f"score covariance for {kernel.name} did not settle; last change "
        f"{np.max(np.abs(second2 - second)):.3g}"
    )


@functools.lru_cache(maxsize=None)
def score_covariance(kernel: Kernel) -> ScoreMatrices:
    """B = var(b) by adaptive quadrature, with its blocks and residual block."""
    mean, second = score_moments(kernel)
    return ScoreMatrices.from_B(second - np.outer(mean, mean))


def classify_limit(kernel: Kernel, sm: ScoreMatrices | None = None) -> LimitCase:
    """Decide which limiting law applies to the EM statistic.

    Full-rank residual matrix gives the simulated sup-law (``CaseI``); a single
    null direction of the form (u1, 0, u3) with u1*u3 > 0 gives chi-square(2)
    (``CaseII``); the normal kernel's collinear pattern is special-cased to
    chi-square(2) as well.
    """
    if sm is None:
        sm = score_covariance(kernel)
    if np.linalg.eigvalsh(sm.B11).min() <= 0:
        raise UnsupportedKernelError(f"B11 is singular for {kernel.name}")
    vals, vecs = np.linalg.eigh(sm.tildeB22)
    top = vals.max()
    small = vals < EPS_RANK * top
    if not small.any():
        return LimitCase("CaseI", eigenvalues=vals)
    if small.sum() == 1:
        u = vecs[:, int(np.argmin(vals))]
        u = u if u[0] >= 0 else -u
        if abs(u[1]) < EPS_RANK and u[0] * u[2] > 0 and min(abs(u[0]), abs(u[2])) > EPS_SIGN:
            return LimitCase("CaseII", null_eigenvector=u, eigenvalues=vals)
        if kernel.family == "normal" and abs(u[0]) > 1 - EPS_RANK:
            return LimitCase("NormalDegenerate", null_eigenvector=u, eigenvalues=vals)
    raise UnsupportedKernelError(
        f"residual score matrix of {kernel.name} matches no supported case "
        f"(eigenvalues {vals})"
    )
