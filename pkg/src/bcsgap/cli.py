"""Command-line front end.

Exit codes: 0 success, 1 check or row failure, 2 configuration or parse error.
Logs go to standard error; tables and summaries to standard output.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import acceptance
from . import asymptotics as asy
from . import fermi_ops
from .config import ConfigError, RunConfig
from .gap_solver import ConvergenceError, TrivialSolution, UnderflowInfeasible, energy_gap, m_integral, solve_gap
from .potential import TableParseError, Verdict, admissibility
from .sweep import run_sweep, summary, write_outputs
from .tc_solver import BracketError, MonotonicityError, StagnationError, critical_temperature

log = logging.getLogger("bcsgap")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--kind", choices=("gaussian", "lorentzian", "yukawa", "tabulated"), help="potential shape")
    common.add_argument("--g", type=float, help="coupling strength")
    common.add_argument("--length", type=float, help="range parameter of a built-in shape")
    common.add_argument("--table", help="two-column r, V(r) file (implies --kind tabulated)")
    common.add_argument("--mu", type=_floats, help="chemical potentials, e.g. '50,100,200'")
    common.add_argument("--kappa", type=_floats, help="kappa values, e.g. '0,0.5,1,2'")
    common.add_argument("--out", help="CSV output path")
    common.add_argument("--workers", type=int, help="worker processes (BCSGAP_WORKERS overrides)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = argparse.ArgumentParser(prog="bcsgap", description="BCS gap, critical temperature and Fermi-surface asymptotics.")
    sub = p.add_subparsers(dest="command", required=True)
    info = sub.add_parser("potential-info", parents=[common], help="admissibility report")
    info.add_argument("--assume-unverifiable", action="store_true", help="trust the conditions that cannot be checked numerically")
    spec = sub.add_parser("spectrum", parents=[common], help="Fermi-sphere eigenvalues e_l and b_mu")
    spec.add_argument("--lmax", type=int, default=None, help="largest angular momentum")
    sub.add_parser("gap", parents=[common], help="zero-temperature gap")
    sub.add_parser("tc", parents=[common], help="critical temperature")
    sw = sub.add_parser("sweep", parents=[common], help="full mu sweep to CSV and JSON lines")
    sw.add_argument("--force", action="store_true", help="ignore cached points")
    ver = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    ver.add_argument("--only", action="append", choices=sorted(acceptance.CHECKS), help="run only this check (repeatable)")
    ver.add_argument("--coarse", type=int, nargs="?", const=2, default=1, metavar="FACTOR",
                     help="divide Gauss-Legendre nodes per panel by FACTOR (default 2)")
    return p


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    kind = args.kind
    if args.table and kind is None:
        kind = "tabulated"
    return cfg.with_overrides(
        potential=kind, g=args.g, length=args.length, table=args.table,
        mu_list=args.mu, kappa_list=args.kappa, out=args.out, workers=args.workers,
    )


def cmd_potential_info(cfg: RunConfig, args) -> int:
    report = admissibility(cfg.build_potential(), assume_unverifiable=args.assume_unverifiable)
    print(report.render())
    return EXIT_FAIL if report.verdict is Verdict.REJECTED else EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    V = cfg.build_potential()
    lmax = args.lmax if args.lmax is not None else cfg.lmax
    for mu in cfg.mu_list:
        sp = fermi_ops.spectrum(V, mu, lmax)
        print(f"mu = {mu:.17g}")
        print(f"  e_mu = {sp.e_mu:.17g}  (argmin l = {sp.argmin})")
        print(f"  trace sum(l<={lmax}) = {sp.trace_partial:.12g}  target = {sp.trace_target:.12g}  rel = {sp.trace_relative_error:.3e}")
        for ell in range(min(lmax, 10) + 1):
            print(f"  e_{ell:<3d} = {sp.eigenvalues[ell]:.17g}")
        for k in cfg.kappa_list:
            d = fermi_ops.b_mu(V, mu, k, sp.e_mu)
            print(f"  kappa = {k:g}: W = {d.w_expect:.17g}  b = {d.b_mu_kappa:.17g}")
    return EXIT_OK


def _solve(cfg: RunConfig, mu: float):
    V = cfg.build_potential()
    return V, solve_gap(V, mu, cfg.solver_config())


_SOLVER_ERRORS = (UnderflowInfeasible, ConvergenceError, TrivialSolution, BracketError, MonotonicityError, StagnationError)


def cmd_gap(cfg: RunConfig, args) -> int:
    failures = 0
    for mu in cfg.mu_list:
        try:
            _, gap = _solve(cfg, mu)
        except _SOLVER_ERRORS as exc:
            failures += 1
            print(f"mu = {mu:.17g}: {type(exc).__name__}: {exc}")
            continue
        print(f"mu = {mu:.17g}")
        print(f"  Xi = {energy_gap(gap):.17g}")
        print(f"  Delta(sqrt mu) = {gap.at_fermi:.17g}")
        for k in cfg.kappa_list:
            print(f"  m(kappa={k:g}) = {m_integral(gap, k):.17g}")
        print(f"  grid = {gap.grid.size} nodes, iterations = {gap.iterations}, residual = {gap.residual:.3e}")
    return EXIT_FAIL if failures == len(cfg.mu_list) else EXIT_OK


def cmd_tc(cfg: RunConfig, args) -> int:
    failures = 0
    for mu in cfg.mu_list:
        try:
            V, gap = _solve(cfg, mu)
            xi = energy_gap(gap)
            rep = critical_temperature(V, mu, cfg.tc_config(), grid=gap.grid, t_guess=xi / asy.UNIVERSAL_RATIO)
        except _SOLVER_ERRORS as exc:
            failures += 1
            print(f"mu = {mu:.17g}: {type(exc).__name__}: {exc}")
            continue
        print(f"mu = {mu:.17g}  T_c = {rep.t_c:.17g}  Xi/T_c = {xi / rep.t_c:.12f}  "
              f"lambda_max(T_c) = {rep.lambda_max_at_tc:.12f}  bisections = {rep.bisection_iters}")
    return EXIT_FAIL if failures == len(cfg.mu_list) else EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    results = run_sweep(cfg, force=args.force)
    write_outputs(cfg, results)
    print(summary(results))
    for p in results:
        if not p.ok:
            print(f"mu = {p.mu:g}: {p.status}")
    return EXIT_OK if any(p.ok for p in results) else EXIT_FAIL


def cmd_verify(cfg: RunConfig, args) -> int:
    results = acceptance.run_checks(args.only, coarse_factor=args.coarse)
    for r in results:
        print(r.line())
        if not r.passed:
            for d in r.details:
                print(f"       {d}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "potential-info": cmd_potential_info,
    "spectrum": cmd_spectrum,
    "gap": cmd_gap,
    "tc": cmd_tc,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _load_config(args)
        if args.command == "verify" and args.coarse < 1:
            raise ConfigError("--coarse factor must be at least 1")
        return COMMANDS[args.command](cfg, args)
    except TableParseError as exc:
        print(f"table parse error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
