"""Per-mu computation chain shared by the CLI and the acceptance checks:
spectrum, second-order data, gap, energy gap, m-integral, T_c."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

from . import asymptotics as asy
from . import fermi_ops
from .gap_solver import (
    ConvergenceError,
    SolverConfig,
    TrivialSolution,
    UnderflowInfeasible,
    energy_gap,
    m_integral,
    solve_gap,
)
from .potential import RadialPotential
from .tc_solver import BracketError, MonotonicityError, StagnationError, TcConfig, critical_temperature

log = logging.getLogger("bcsgap")

SPECTRUM_LMAX = 8


@dataclass
class PointResult:
    mu: float
    records: list[asy.SweepRecord]
    status: str
    grid_size: int = 0
    iterations: int = 0
    residual: float = math.nan
    seconds: float = 0.0
    b_by_kappa: dict[float, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def record(self, kappa: float) -> asy.SweepRecord:
        for r in self.records:
            if r.kappa == kappa:
                return r
        raise KeyError(kappa)


def b0_effective(mu: float, b: float, kappa: float) -> float:
    """The b for which pi/(2 sqrt(mu) b) equals the kappa-shifted exponent."""
    x = asy.exponent(mu, b) + 0.5 * math.pi * kappa
    return math.pi / (2.0 * math.sqrt(mu) * x) if x < 0 else math.nan


def compute_point(
    V: RadialPotential,
    mu: float,
    kappas,
    solver: SolverConfig = SolverConfig(),
    tc: TcConfig | None = None,
) -> PointResult:
    """All per-mu quantities; failures are reported in ``status``, not raised."""
    t0 = time.perf_counter()
    kappas = [float(k) for k in kappas]
    tc = TcConfig(grid=solver.grid) if tc is None else tc
    records = [asy.SweepRecord(mu=float(mu), g=V.coupling, kappa=k) for k in kappas]
    res = PointResult(float(mu), records, "pending")
    try:
        spec = fermi_ops.spectrum(V, mu, SPECTRUM_LMAX)
        e = spec.e_mu
        for r in records:
            r.e_mu = e
        bs = {k: fermi_ops.b_mu(V, mu, k, e).b_mu_kappa for k in sorted(set(kappas) | {0.0})}
        res.b_by_kappa = bs
        for r in records:
            r.b_mu_kappa = bs[r.kappa]
            if bs[r.kappa] < 0:
                r.b_mu_zero_effective = b0_effective(mu, bs[r.kappa], r.kappa)
                r.xi_prediction = float(asy.predict_xi(mu, bs[r.kappa], r.kappa))
                r.tc_prediction = float(asy.predict_tc(mu, bs[r.kappa], r.kappa))
        gap = solve_gap(V, mu, solver)
        res.grid_size, res.iterations, res.residual = gap.grid.size, gap.iterations, gap.residual
        xi = energy_gap(gap)
        d_f = gap.at_fermi
        report = critical_temperature(V, mu, tc, grid=gap.grid, t_guess=xi / asy.UNIVERSAL_RATIO)
        for r in records:
            r.xi, r.delta_fermi, r.t_c = xi, d_f, report.t_c
            r.m_mu = m_integral(gap, r.kappa)
            r.ratio = xi / report.t_c
            if r.b_mu_kappa < 0:
                r.thm1_functional = asy.thm1_functional(xi, mu, r.b_mu_kappa, r.kappa)
            r.status = "ok"
        res.status = "ok"
    except UnderflowInfeasible as exc:
        res.status = f"infeasible: {exc}"
    except (ConvergenceError, TrivialSolution, BracketError, MonotonicityError, StagnationError, ArithmeticError) as exc:
        res.status = f"failed: {exc}"
    for r in records:
        if r.status != "ok":
            r.status = res.status
    res.seconds = time.perf_counter() - t0
    log.info("mu=%g status=%s %.2fs", mu, res.status.split(":")[0], res.seconds)
    return res
