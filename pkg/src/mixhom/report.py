"""Data ingestion, test reports and plot-data export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from . import __version__
from .calibration import DEFAULT_DRAWS, DEFAULT_SEED, LimitLaw, cached_limit_law, limit_law, load_law
from .emtest import EmConfig, EmTestResult, MixingDistribution, em_statistic
from .errors import DomainError, ParseError
from .kernels import Kernel
from .lrt import bootstrap_null, lrt_statistic, table_p_value
from .nullfit import NullFit


def load_series(path, column=0, has_header: bool | None = None,
                log_transform: bool = False) -> NDArray:
    """Read one numeric column from a comma-separated UTF-8 file.

    ``column`` is an index or a header name. With ``has_header=None`` the
    first row is treated as a header when its selected cell is not numeric.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path} contains no data")

    idx = column
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [c.strip() for c in rows[0]]
        if column not in header:
            raise ParseError(f"column {column!r} not in header {header}")
        idx, has_header = header.index(column), True
    idx = int(idx)

    def cell(r, i):
        try:
            return r[idx].strip()
        except IndexError:
            raise ParseError(f"row {i + 1} has no column {idx}") from None

    if has_header is None:
        try:
            float(cell(rows[0], 0))
            has_header = False
        except ValueError:
            has_header = True
    start = 1 if has_header else 0

    values = []
    for i in range(start, len(rows)):
        text = cell(rows[i], i)
        try:
            v = float(text)
        except ValueError:
            raise ParseError(f"row {i + 1}: non-numeric value {text!r}") from None
        if not math.isfinite(v):
            raise ParseError(f"row {i + 1}: non-finite value {text!r}")
        if log_transform:
            if v <= 0:
                raise DomainError(f"row {i + 1}: log transform needs positive values, got {v}")
            v = math.log(v)
        values.append(v)
    if not values:
        raise ParseError(f"{path} has no data rows")
    return np.array(values)


def density_curves(kernel: Kernel, G: MixingDistribution, null_fit: NullFit,
                   lo: float, hi: float, points: int = 200) -> NDArray:
    """Columns (x, fitted mixture density, fitted null density) on an even grid."""
    if points < 2:
        raise DomainError("need at least 2 points")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DomainError(f"degenerate range [{lo}, {hi}]")
    x = np.linspace(lo, hi, points)
    null = MixingDistribution(1.0, _theta(null_fit), _theta(null_fit))
    return np.column_stack([x, G.density(kernel, x), null.density(kernel, x)])


def _theta(null_fit: NullFit):
    from .kernels import Theta
    return Theta(null_fit.mu_hat, null_fit.sigma_hat)


def write_curves(table: NDArray, dest) -> None:
    """Write ``table`` as CSV to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(csv.writer(dest, lineterminator="\n"), table)
        return
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        _write_rows(csv.writer(fh, lineterminator="\n"), table)


def _write_rows(w, table):
    w.writerow(["x", "mixture_density", "null_density"])
    for row in table:
        w.writerow([repr(float(v)) for v in row])


@dataclass
class TestReport:
    kernel: str
    n: int
    transform: str
    null_fit: dict
    em: dict
    calibration: dict
    lrt: dict | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def em_summary(res: EmTestResult) -> dict:
    return {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "a_n": res.a_n,
        "K": res.K,
        "per_pi": [{"pi": t.pi, "M": t.M, "fit": t.fit.to_dict()} for t in res.per_pi],
        "fit": res.fit.to_dict(),
    }


def resolve_law(kernel: Kernel, draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
                table: str | None = None, cache_dir: str | None = None,
                workers: int = 1) -> LimitLaw:
    if table is not None:
        return load_law(table)
    if cache_dir is not None:
        return cached_limit_law(kernel, draws, seed, cache_dir, workers)
    return limit_law(kernel, draws, seed, workers)


def run_report(kernel: Kernel, data, *, config: EmConfig | None = None,
               transform: str = "none", draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED,
               table: str | None = None, cache_dir: str | None = None,
               lrt_reps: int | None = None, workers: int = 1) -> TestReport:
    """EM-test (and optionally the LRT with a simulated null) on one series."""
    x = np.asarray(data, dtype=float)
    law = resolve_law(kernel, draws, seed, table, cache_dir, workers)
    res = em_statistic(kernel, x, config, law=law)
    lrt = None
    if lrt_reps:
        lr = lrt_statistic(kernel, x)
        null_table = bootstrap_null(kernel, x.size, lrt_reps, seed, "lrt", workers=workers)
        lrt = {"statistic": lr.statistic, "p_value": table_p_value(null_table, lr.statistic),
               "reps": lrt_reps, "fit": lr.full_fit.to_dict()}
    return TestReport(
        kernel=kernel.name,
        n=int(x.size),
        transform=transform,
        null_fit=asdict(res.null_fit),
        em=em_summary(res),
        calibration={"case": law.case.tag, "draws": law.draws, "seed": law.seed,
                     "special_cased": law.special_cased},
        lrt=lrt,
    )
