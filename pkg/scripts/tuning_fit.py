"""Fit a_n(n) = 0.2 + exp(c0 + c1/n) from the embedded design or a fresh size sweep.

Example: python3 scripts/tuning_fit.py --kernel normal
         python3 scripts/tuning_fit.py --kernel logistic --simulate --reps 2000
"""

import argparse
import json

from mixhom import Kernel
from mixhom.experiments import fit_tuning_model, design_rows, tuning_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernel", default="logistic")
    ap.add_argument("--simulate", action="store_true", help="rerun the a_n x n size sweep")
    ap.add_argument("--a-values", nargs="+", type=float, default=[0.3, 0.4, 0.5, 0.6])
    ap.add_argument("--n-values", nargs="+", type=int, default=[50, 100, 300, 500])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    k = Kernel.parse(args.kernel)
    if args.simulate:
        rows = tuning_experiment(k, args.a_values, args.n_values, args.reps, seed=args.seed,
                                 workers=args.workers)
    else:
        rows = design_rows(k)
    m = fit_tuning_model(rows)
    print(json.dumps({"kernel": k.name, "c0": m.c0, "c1": m.c1,
                      "a_n": {n: m.a_n(n) for n in args.n_values}}, indent=2))


if __name__ == "__main__":
    main()
