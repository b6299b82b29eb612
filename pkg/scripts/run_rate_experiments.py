#!/usr/bin/env python3
"""Desk-scale geometric-rate experiments.

Sweeps the built-in benchmark functions over l_p-degree families on LCL or
Leja grids, fits error = c * rho**(-n) per configuration, and prints the
fitted rho next to the published reference rate where one is known.  One
record CSV per configuration lands in --outdir.
"""
import argparse
import math
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mvnewton.analysis import convergence_run, fit_rate, make_benchmark, optimal_rho

P_VALUES = {"1": 1, "2": 2, "inf": math.inf}

CONFIGS = [
    # label, kind, dim, params, degrees, family
    ("runge_r1_m2", "runge", 2, dict(r=1, s=1), range(4, 25, 2)),
    ("runge_r1_m3", "runge", 3, dict(r=1, s=1), range(4, 25, 2)),
    ("runge_r1_m4", "runge", 4, dict(r=1, s=1), range(4, 25, 2)),
    ("runge_r3_m3", "runge", 3, dict(r=3, s=1), range(6, 41, 2)),
    ("f1_r54_m2", "f1", 2, dict(r=5 / 4), range(4, 41, 2)),
    ("f3_m3", "f3", 3, dict(), range(4, 33, 2)),
    ("f4_a54_m2", "f4", 2, dict(a=5 / 4), range(4, 41, 2)),
    ("f5_k11_m2", "f5", 2, dict(k1=1, k2=1), range(2, 21, 2)),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="rate_results", help="output directory")
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--family", choices=("lcl", "leja"), default="lcl")
    parser.add_argument("--quick", action="store_true", help="halve the degree ranges")
    parser.add_argument(
        "--only", help="comma list of config labels to run (default: all)"
    )
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    selected = set(args.only.split(",")) if args.only else None

    print(f"{'config':<16} {'p':>4} {'fitted rho':>11} {'reference':>10} {'R^2':>7}")
    for label, kind, dim, params, degrees in CONFIGS:
        if selected and label not in selected:
            continue
        degrees = list(degrees)
        if args.quick:
            degrees = degrees[: max(4, len(degrees) // 2)]
        func = make_benchmark(kind, dim, **params)
        for p_name, p in P_VALUES.items():
            t0 = time.perf_counter()
            record = convergence_run(
                func, p, args.family, degrees, num_samples=args.samples, seed=args.seed
            )
            fit = fit_rate(record)
            reference = optimal_rho(func, p)
            ref_text = f"{reference:.4f}" if reference is not None else "unknown"
            print(
                f"{label:<16} {p_name:>4} {fit.rho:>11.4f} {ref_text:>10} "
                f"{fit.r_squared:>7.4f}   [{time.perf_counter() - t0:.1f}s]"
            )
            record.write_csv(outdir / f"{label}_p{p_name}_{args.family}.csv")
            fit.write_json(outdir / f"{label}_p{p_name}_{args.family}.fit.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
