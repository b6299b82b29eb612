#!/usr/bin/env python3
"""Lebesgue-constant sweep over dimensions, degree families, and node
families, reproducing the qualitative growth comparison: sub-exponential
growth for total and Euclidean degree versus slow growth for maximum
degree.  Writes one CSV with columns m,p,n,num_coeffs,lambda.
"""
import argparse
import csv
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mvnewton.analysis import lebesgue_estimate
from mvnewton.grid import axes_for, build_grid
from mvnewton.multi_index import make_lp_set

P_VALUES = {"1": 1, "2": 2, "inf": math.inf}
DEGREES = {1: [2, 4, 8, 16, 32], 2: [2, 4, 8, 16], 3: [1, 2, 4, 8]}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="lebesgue_sweep.csv")
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--family", choices=("lcl", "leja"), default="lcl")
    parser.add_argument("--max-dim", type=int, default=3)
    parser.add_argument("--order", type=int, default=0, help="Lebesgue order k")
    parser.add_argument("--cap", type=int, default=5000)
    args = parser.parse_args()

    rows = []
    for m in range(1, args.max_dim + 1):
        for p_name, p in P_VALUES.items():
            for n in DEGREES.get(m, [1, 2, 4]):
                index_set = make_lp_set(m, n, p)
                if len(index_set) > args.cap:
                    print(f"skip m={m} p={p_name} n={n}: |A|={len(index_set)}")
                    continue
                grid = build_grid(index_set, axes_for(index_set, args.family))
                lam = lebesgue_estimate(
                    grid, args.samples, args.seed, args.order, size_cap=args.cap
                )
                rows.append([m, p_name, n, len(index_set), f"{lam:.17g}"])
                print(f"m={m} p={p_name:>3} n={n:>2} |A|={len(index_set):>5} "
                      f"lambda={lam:.4f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "p", "n", "num_coeffs", "lambda"])
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
