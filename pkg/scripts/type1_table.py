"""Type-I error rates of the EM-test at the limiting-law critical values.

Example: python3 scripts/type1_table.py --kernels logistic t10 --n 100 200 --reps 5000
"""

import argparse
import json

from mixhom import Kernel
from mixhom.experiments import type1_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernels", nargs="+", default=["logistic", "extreme", "t10", "normal"])
    ap.add_argument("--n", nargs="+", type=int, default=[100, 200])
    ap.add_argument("--reps", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    rows = []
    for name in args.kernels:
        for n in args.n:
            res = type1_experiment(Kernel.parse(name), n, args.reps, seed=[args.seed, n],
                                   workers=args.workers)
            rates = {f"{lv:g}": round(100 * r, 2) for lv, r in res.rates.items()}
            rows.append({"kernel": name, "n": n, "reps": args.reps, "rates_pct": rates})
            print(json.dumps(rows[-1]), flush=True)


if __name__ == "__main__":
    main()
