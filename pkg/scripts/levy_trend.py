#!/usr/bin/env python3
"""Observable-diameter decay along the Hamming cube family.

Runs the trend experiment against the documented screen roster (6-point
normalized circle, quarter-side square, singleton) and prints one row per
cube dimension: the exact two-group separation, the roster supremum of the
observable-diameter lower bounds, and the per-screen brackets.  The roster
supremum column should never increase with the dimension.

Deterministic for a fixed seed, regardless of --workers.

Usage:
  python3 scripts/levy_trend.py
  python3 scripts/levy_trend.py --max-n 10 --kappa 0.1 --kappa 0.05 --workers 4
  python3 scripts/levy_trend.py --out report.json --csv report.csv
"""

import argparse
from pathlib import Path

from mmconc import FamilySpec, report_csv, report_json, run_levy_experiment


def parse_args():
    parser = argparse.ArgumentParser(
        description="Observable-diameter trend along Hamming cubes"
    )
    parser.add_argument("--min-n", type=int, default=2, help="smallest cube dimension")
    parser.add_argument("--max-n", type=int, default=8, help="largest cube dimension")
    parser.add_argument(
        "--kappa",
        type=float,
        action="append",
        help="mass parameter, repeatable (default: 0.1)",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--samples", type=int, default=64, help="screen maps sampled per cell")
    parser.add_argument("--effort", type=int, default=10_000, help="heuristic search moves")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers")
    parser.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    parser.add_argument("--csv", type=Path, default=None, help="write the flat CSV report here")
    return parser.parse_args()


def main():
    args = parse_args()
    kappas = args.kappa or [0.1]
    family = [FamilySpec("hamming_cube", n) for n in range(args.min_n, args.max_n + 1)]
    report = run_levy_experiment(
        family,
        kappa_grid=kappas,
        seed=args.seed,
        samples=args.samples,
        effort=args.effort,
        workers=args.workers,
    )

    screens = [row["screen"] for row in report.screens]
    for kappa in kappas:
        print(f"\nkappa = {kappa}")
        header = f"{'n':>3} {'sep':>10} {'roster sup':>11}"
        for name in screens:
            header += f" {name + ' [lo, up]':>22}"
        print(header)
        for spec in family:
            sep = next(
                r for r in report.sep_rows if r["n"] == spec.n and r["kappa"] == kappa
            )
            sup = next(
                r for r in report.suprema if r["n"] == spec.n and r["kappa"] == kappa
            )
            sep_txt = f"{sep['sep_value']:.4f}" if sep["sep_is_exact"] else f">={sep['sep_lower']:.4f}"
            line = f"{spec.n:>3} {sep_txt:>10} {sup['roster_sup']:>11.4f}"
            for name in screens:
                cell = next(
                    c
                    for c in report.cells
                    if c["n"] == spec.n and c["screen"] == name and c["kappa"] == kappa
                )
                bracket = f"[{cell['obsdiam_lower']:.4f}, {cell['obsdiam_upper']:.4f}]"
                line += f" {bracket:>22}"
            print(line)

    if args.out is not None:
        args.out.write_text(report_json(report.as_dict()))
        print(f"\nJSON report written to {args.out}")
    if args.csv is not None:
        args.csv.write_text(report_csv(report.as_dict()))
        print(f"CSV report written to {args.csv}")


if __name__ == "__main__":
    main()
