"""Null calibration of the EM statistic.

For a full-rank residual score matrix ``T`` the statistic converges to

    sup_v { 2 (v^2)' w - (v^2)' T (v^2) },   w ~ N(0, T),

with ``v^2 = (v1^2, 2 v1 v2, v2^2)``. Writing ``v = r (cos phi, sin phi)``
the radial part maximises in closed form, leaving

    max_phi  max(u(phi)' w, 0)^2 / (u(phi)' T u(phi)),

``u(phi) = (cos^2 phi, 2 cos phi sin phi, sin^2 phi)``, which is evaluated
on a 720-cell grid and refined by golden-section search. The other cases
are calibrated by chi-square(2).
"""

from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import __version__, _core
from .errors import CalibrationError, DomainError
from .geometry import LimitCase, classify_limit, score_covariance
from .kernels import Kernel

GRID = 720
GOLDEN_ITERS = 48  # shrinks a 2-cell bracket below 1e-10
BLOCK = 10_000
DEFAULT_DRAWS = 100_000
DEFAULT_SEED = 20190722


@dataclass(frozen=True)
class SquaredDirection:
    v: NDArray
    v_sq: NDArray = field(init=False)

    def __post_init__(self):
        v1, v2 = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "v_sq", np.array([v1 * v1, 2.0 * v1 * v2, v2 * v2]))


@dataclass(frozen=True)
class LimitLaw:
    """Calibration object: an empirical sup-law table or chi-square(2)."""

    case: LimitCase
    quantile_table: NDArray | None = None
    draws: int = 0
    seed: int | None = None
    tildeB22: NDArray | None = None

    @property
    def special_cased(self) -> bool:
        return self.case.tag == "NormalDegenerate"

    def p_value(self, stat: float) -> float:
        return p_value(self, stat)

    def critical_value(self, level: float) -> float:
        if not 0 < level < 1:
            raise DomainError("level must lie in (0, 1)")
        if self.case.chi2:
            return -2.0 * math.log(level)
        table = _table(self)
        return float(np.quantile(table, 1.0 - level))

    def to_dict(self) -> dict:
        return {
            "case": self.case.tag,
            "draws": self.draws,
            "seed": self.seed,
            "tildeB22": None if self.tildeB22 is None else self.tildeB22.tolist(),
            "table": None if self.quantile_table is None else self.quantile_table.tolist(),
            "version": __version__,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LimitLaw":
        table = d.get("table")
        tb = d.get("tildeB22")
        return cls(
            case=LimitCase(d["case"]),
            quantile_table=None if table is None else np.asarray(table, dtype=float),
            draws=int(d.get("draws", 0)),
            seed=d.get("seed"),
            tildeB22=None if tb is None else np.asarray(tb, dtype=float),
        )


def _table(law: LimitLaw) -> NDArray:
    if law.quantile_table is None or law.quantile_table.size == 0:
        raise CalibrationError("case-I law has no simulated table")
    return law.quantile_table


def _unit_directions(ngrid: int = GRID) -> NDArray:
    phi = np.arange(ngrid) * (np.pi / ngrid)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([c * c, 2 * c * s, s * s], axis=1)


def _check_case_matrix(T: NDArray) -> NDArray:
    T = np.asarray(T, dtype=float)
    if T.shape != (3, 3) or not np.allclose(T, T.T, rtol=0, atol=1e-12 * (1 + np.abs(T).max())):
        raise DomainError("tildeB22 must be a symmetric 3x3 matrix")
    U = _unit_directions()
    den = np.einsum("gi,ij,gj->g", U, T, U)
    if np.any(den <= 0):
        raise DomainError("u'Tu <= 0 for some direction; the case-I condition fails")
    return np.ascontiguousarray(0.5 * (T + T.T))


def limit_draws(tildeB22: ArrayLike, W: ArrayLike) -> NDArray:
    """Vectorised sup over v for each row of ``W``."""
    T = _check_case_matrix(tildeB22)
    W = np.ascontiguousarray(np.atleast_2d(W), dtype=float)
    return _core.limit_sup(T, W, GRID, GOLDEN_ITERS)


def limit_draw(tildeB22: ArrayLike, w: ArrayLike) -> float:
    return float(limit_draws(tildeB22, np.asarray(w, dtype=float)[None, :])[0])


def _sqrtm_psd(T: NDArray) -> NDArray:
    vals, vecs = np.linalg.eigh(T)
    if vals.min() < -1e-10 * max(vals.max(), 1e-300):
        raise DomainError(f"tildeB22 is not positive semidefinite (eigenvalues {vals})")
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def _block(args) -> NDArray:
    T, root, seq, size = args
    rng = np.random.default_rng(seq)
    W = rng.standard_normal((size, 3)) @ root
    return _core.limit_sup(T, np.ascontiguousarray(W), GRID, GOLDEN_ITERS)


def simulate_limit(tildeB22: ArrayLike, draws: int = DEFAULT_DRAWS,
                   seed: int = DEFAULT_SEED, workers: int = 1) -> LimitLaw:
    """Monte Carlo table of the case-I limiting law.

    Draws are generated in fixed blocks with one child seed per block, so
    the sorted table does not depend on ``workers``.
    """
    if draws < 1:
        raise DomainError("draws must be positive")
    T = _check_case_matrix(tildeB22)
    root = _sqrtm_psd(T)
    nblocks = -(-draws // BLOCK)
    seqs = np.random.SeedSequence(seed).spawn(nblocks)
    sizes = [min(BLOCK, draws - b * BLOCK) for b in range(nblocks)]
    jobs = [(T, root, s, m) for s, m in zip(seqs, sizes)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_block, jobs))
    else:
        parts = [_block(j) for j in jobs]
    table = np.sort(np.concatenate(parts))
    return LimitLaw(case=LimitCase("CaseI"), quantile_table=table, draws=draws,
                    seed=seed, tildeB22=T)


def p_value(law: LimitLaw, stat: float) -> float:
    """Upper-tail probability of ``stat`` under the law.

    Case I uses (1 + #{draws >= stat}) / (N + 1); the chi-square(2) cases use
    the exact survival function exp(-stat / 2).
    """
    if not math.isfinite(stat):
        raise DomainError("statistic must be finite")
    if law.case.chi2:
        return math.exp(-max(stat, 0.0) / 2.0)
    table = _table(law)
    exceed = table.size - np.searchsorted(table, stat, side="left")
    return (1.0 + exceed) / (table.size + 1.0)


@functools.lru_cache(maxsize=16)
def limit_law(kernel: Kernel, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
              workers: int = 1) -> LimitLaw:
    """The null calibration for ``kernel`` (simulated only in case I)."""
    sm = score_covariance(kernel)
    case = classify_limit(kernel, sm)
    if case.chi2:
        return LimitLaw(case=case, tildeB22=sm.tildeB22)
    law = simulate_limit(sm.tildeB22, draws, seed, workers)
    return LimitLaw(case=case, quantile_table=law.quantile_table, draws=draws,
                    seed=seed, tildeB22=sm.tildeB22)


def save_law(law: LimitLaw, path, kernel: Kernel | None = None) -> None:
    d = law.to_dict()
    if kernel is not None:
        d["kernel"] = kernel.name
    Path(path).write_text(json.dumps(d))


def load_law(path) -> LimitLaw:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CalibrationError(f"cannot read calibration table {path}: {exc}") from exc
    return LimitLaw.from_dict(d)


def cached_limit_law(kernel: Kernel, draws: int, seed: int, cache_dir,
                     workers: int = 1) -> LimitLaw:
    """Load the law from ``cache_dir`` or simulate and store it there."""
    cache_dir = Path(cache_dir)
    path = cache_dir / f"{kernel.name}-{draws}-{seed}-v{__version__}.json"
    if path.exists():
        return load_law(path)
    law = limit_law(kernel, draws, seed, workers)
    cache_dir.mkdir(parents=True, exist_ok=True)
    save_law(law, path, kernel)
    return law
