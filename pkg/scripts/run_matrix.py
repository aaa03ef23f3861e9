#!/usr/bin/env python3
"""Run the acceptance matrix and dump every computed point as CSV.

    python3 scripts/run_matrix.py --out matrix.csv
"""
import argparse
import csv
import sys

from bcsgap import acceptance
from bcsgap.sweep import CSV_COLUMNS, fmt


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="matrix.csv")
    args = ap.parse_args()

    ctx = acceptance.Context()
    results = [check(ctx) for check in acceptance.CHECKS.values()]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("potential",) + CSV_COLUMNS[1:])
        for kind, points in ctx.matrix.items():
            for p in points:
                for r in p.records:
                    w.writerow([kind] + [fmt(getattr(r, a)) for a in (
                        "mu", "g", "kappa", "e_mu", "b_mu_kappa", "xi", "delta_fermi", "t_c",
                        "m_mu", "thm1_functional", "ratio")] + [r.status])
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
