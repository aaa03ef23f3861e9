#!/usr/bin/env python3
"""Convergence of Xi and T_c under node and panel refinement at one mu."""
import argparse

from bcsgap.gap_solver import GridConfig, SolverConfig, energy_gap, shifted_residual, solve_gap
from bcsgap.potential import RadialPotential
from bcsgap.tc_solver import TcConfig, critical_temperature


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", default="gaussian", choices=("gaussian", "lorentzian", "yukawa"))
    ap.add_argument("--g", type=float, default=30.0)
    ap.add_argument("--mu", type=float, default=100.0)
    args = ap.parse_args()

    V = RadialPotential(args.kind, args.g)
    base = GridConfig()
    variants = [
        ("nodes/4", base.coarsened(4)),
        ("nodes/2", base.coarsened(2)),
        ("default", base),
        ("panels x2", base.refined(2)),
        ("dense x4", base.densified(4)),
    ]
    ref_xi = ref_tc = None
    rows = []
    for label, grid in variants:
        gap = solve_gap(V, args.mu, SolverConfig(grid=grid))
        xi = energy_gap(gap)
        tc = critical_temperature(V, args.mu, TcConfig(grid=grid), grid=gap.grid).t_c
        rows.append((label, gap.grid.size, xi, tc, shifted_residual(V, gap)))
        if label == "dense x4":
            ref_xi, ref_tc = xi, tc
    print(f"{'grid':>10} {'nodes':>6} {'Xi':>22} {'rel':>9} {'T_c':>22} {'rel':>9} {'shifted res':>11}")
    for label, n, xi, tc, res in rows:
        print(f"{label:>10} {n:>6} {xi:>22.16e} {abs(xi / ref_xi - 1):>9.2e} {tc:>22.16e} {abs(tc / ref_tc - 1):>9.2e} {res:>11.2e}")


if __name__ == "__main__":
    main()
