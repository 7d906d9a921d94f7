"""Command-line entry point ``mixhom``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import DEFAULT_DRAWS, DEFAULT_SEED, limit_law, save_law
from .emtest import EmConfig, MixingDistribution, em_statistic
from .errors import ConfigurationError, MixhomError, ParseError
from .experiments import (ALTERNATIVES, critical_value, fit_tuning_model, power_experiment,
                          design_rows, tuning_experiment, type1_experiment)
from .geometry import classify_limit, score_covariance
from .kernels import Kernel, Theta
from .lrt import bootstrap_null, lrt_statistic, table_p_value
from .report import density_curves, load_series, run_report, write_curves

# entries below this are quadrature noise around exact zeros
ZERO_TOL = 1e-12


def sig6(value):
    """Round floats (recursively) to 6 significant digits."""
    if isinstance(value, float):
        return float(f"{value:.6g}")
    if isinstance(value, dict):
        return {k: sig6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sig6(v) for v in value]
    return value


def dump_json(obj, out=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return text


def _pis(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --pis {text!r}") from None


def _a_n(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--a-n must be 'auto' or a number, got {text!r}") from None


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--range needs 'lo,hi', got {text!r}") from None
    return lo, hi


def _column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _header(text: str):
    try:
        return {"auto": None, "yes": True, "no": False}[text]
    except KeyError:
        raise argparse.ArgumentTypeError("--header must be auto, yes or no") from None


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--column", type=_column, default=0, help="index or header name")
    p.add_argument("--header", type=_header, default=None, metavar="{auto,yes,no}")
    p.add_argument("--log-transform", action="store_true")


def _em_args(p):
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--pis", type=_pis, default=(0.1, 0.3, 0.5))
    p.add_argument("--a-n", type=_a_n, default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixhom",
                                     description="Homogeneity tests for location-scale mixtures")
    parser.add_argument("--version", action="version", version=f"mixhom {__version__}")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--kernel", default="logistic",
                        help="logistic, extreme, t<nu> or normal")
    shared.add_argument("--seed", type=int, default=DEFAULT_SEED)
    shared.add_argument("--out", default=None)
    shared.add_argument("--threads", type=int, default=1)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[shared], help="EM-test on a data column")
    _data_args(p)
    _em_args(p)
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)
    p.add_argument("--table", default=None, help="limit-law table JSON from 'calibrate'")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--lrt-reps", type=int, default=None, help="also run the LRT")

    p = sub.add_parser("lrt", parents=[shared], help="penalised LRT with simulated null")
    _data_args(p)
    p.add_argument("--reps", type=int, default=1000)

    p = sub.add_parser("calibrate", parents=[shared], help="simulate the limiting law")
    p.add_argument("--draws", type=int, default=DEFAULT_DRAWS)

    sub.add_parser("matrices", parents=[shared], help="print B and the residual block")

    p = sub.add_parser("experiment", parents=[shared], help="run a simulation study")
    p.add_argument("kind", choices=["type1", "power", "tuning"])
    p.add_argument("--spec", required=True, help="JSON experiment description")

    p = sub.add_parser("curves", parents=[shared], help="fitted densities as CSV")
    _data_args(p)
    _em_args(p)
    p.add_argument("--range", type=_range, default=None)
    p.add_argument("--points", type=int, default=200)
    return parser


def _series(args):
    return load_series(args.data, args.column, args.header, args.log_transform)


def _config(args) -> EmConfig:
    return EmConfig(pis=args.pis, K=args.K, a_n=args.a_n)


def cmd_test(args, kernel):
    x = _series(args)
    rep = run_report(kernel, x, config=_config(args),
                     transform="log" if args.log_transform else "none",
                     draws=args.draws, seed=args.seed, table=args.table,
                     cache_dir=args.cache_dir, lrt_reps=args.lrt_reps, workers=args.threads)
    dump_json(rep.to_dict(), args.out)


def cmd_lrt(args, kernel):
    x = _series(args)
    res = lrt_statistic(kernel, x)
    table = bootstrap_null(kernel, x.size, args.reps, args.seed, "lrt", workers=args.threads)
    dump_json({
        "kernel": kernel.name, "n": int(x.size), "statistic": res.statistic,
        "p_value": table_p_value(table, res.statistic), "reps": args.reps, "seed": args.seed,
        "critical_value_5pct": critical_value(table, 0.05),
        "fit": res.full_fit.to_dict(), "version": __version__,
    }, args.out)


def cmd_calibrate(args, kernel):
    law = limit_law(kernel, args.draws, args.seed, args.threads)
    if args.out:
        save_law(law, args.out, kernel)
    else:
        dump_json(law.to_dict())


def cmd_matrices(args, kernel):
    sm = score_covariance(kernel)
    case = classify_limit(kernel, sm)
    def clean(M):
        M = np.array(M, dtype=float)
        M[np.abs(M) < ZERO_TOL] = 0.0
        return M.tolist()

    dump_json(sig6({
        "kernel": kernel.name, "B": clean(sm.B), "tildeB22": clean(sm.tildeB22),
        "case": case.tag,
        "null_eigenvector": None if case.null_eigenvector is None
        else np.asarray(case.null_eigenvector).tolist(),
    }), args.out)


def _alternative(spec, kernel):
    alt = spec["alternative"]
    if isinstance(alt, str):
        try:
            return ALTERNATIVES[kernel.family][alt][0]
        except KeyError:
            raise ConfigurationError(f"unknown alternative {alt!r} for {kernel.name}") from None
    return MixingDistribution(float(alt["alpha1"]), Theta(*alt["theta1"]), Theta(*alt["theta2"]))


def _spec_config(spec) -> EmConfig:
    return EmConfig(pis=tuple(spec.get("pis", (0.1, 0.3, 0.5))), K=int(spec.get("K", 3)),
                    a_n=spec.get("a_n", "auto"))


def run_experiment(kind: str, spec: dict, seed: int = DEFAULT_SEED, workers: int = 1) -> dict:
    """Execute one experiment description and return a JSON-ready result."""
    try:
        kernel = Kernel.parse(spec["kernel"])
        seed = int(spec.get("seed", seed))
        if kind == "type1":
            levels = tuple(spec.get("levels", (0.10, 0.05, 0.01)))
            res = type1_experiment(kernel, int(spec["n"]), int(spec["reps"]), levels,
                                   _spec_config(spec), seed, workers=workers)
            return {"kernel": kernel.name, "n": res.n, "reps": res.reps, "seed": seed,
                    "rates": {str(k): v for k, v in res.rates.items()},
                    "critical_values": {str(k): v for k, v in res.critical_values.items()}}
        if kind == "power":
            n, reps = int(spec["n"]), int(spec["reps"])
            level = float(spec.get("level", 0.05))
            null_reps = int(spec.get("null_reps", 10_000))
            G = _alternative(spec, kernel)
            out = {"kernel": kernel.name, "n": n, "reps": reps, "null_reps": null_reps,
                   "level": level, "seed": seed, "alternative": G.to_dict()}
            for stat in spec.get("statistics", ["em", "lrt"]):
                cfg = _spec_config(spec) if stat == "em" else None
                table = bootstrap_null(kernel, n, null_reps, [seed, 0], stat, cfg, workers)
                pw = power_experiment(kernel, G, n, reps, level, table, [seed, 1], stat,
                                      cfg, workers)
                out[stat] = {"power": pw.power, "critical_value": pw.critical_value}
            return out
        if kind == "tuning":
            if spec.get("published_design"):
                rows = design_rows(kernel)
            else:
                rows = tuning_experiment(kernel, spec["a_values"], spec["n_values"],
                                         int(spec["reps"]), float(spec.get("q", 0.05)),
                                         seed, workers=workers)
            model = fit_tuning_model(rows)
            return {"kernel": kernel.name, "c0": model.c0, "c1": model.c1,
                    "beta": list(model.beta),
                    "rows": [{"a_n": r.a_n, "n": r.n, "y": r.y, "q_hat": r.q_hat}
                             for r in rows]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad experiment description: {exc!r}") from exc
    raise ConfigurationError(f"unknown experiment {kind!r}")


def cmd_experiment(args, kernel):
    try:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read experiment description {args.spec}: {exc}") from exc
    spec.setdefault("kernel", kernel.name)
    dump_json(run_experiment(args.kind, spec, args.seed, args.threads), args.out)


def cmd_curves(args, kernel):
    x = _series(args)
    res = em_statistic(kernel, x, _config(args), with_p_value=False)
    if args.range is None:
        pad = 0.1 * (x.max() - x.min())
        lo, hi = x.min() - pad, x.max() + pad
    else:
        lo, hi = args.range
    table = density_curves(kernel, res.fit, res.null_fit, lo, hi, args.points)
    write_curves(table, args.out or sys.stdout)


COMMANDS = {"test": cmd_test, "lrt": cmd_lrt, "calibrate": cmd_calibrate,
            "matrices": cmd_matrices, "experiment": cmd_experiment, "curves": cmd_curves}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        kernel = Kernel.parse(args.kernel)
        if args.threads < 1:
            raise ConfigurationError("--threads must be positive")
        COMMANDS[args.command](args, kernel)
    except MixhomError as exc:
        print(f"mixhom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
