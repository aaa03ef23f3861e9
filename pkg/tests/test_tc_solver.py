import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bcsgap import asymptotics as asy
from bcsgap import fermi_ops
from bcsgap.gap_solver import GridConfig, SolverConfig, build_grid, energy_gap, solve_gap
from bcsgap.tc_solver import (
    BracketError,
    TcConfig,
    critical_temperature,
    linear_lambda_max,
    symmetrised_operator,
    thermal_denominator,
    top_eigenvalue,
)
from bcsgap.potential import RadialPotential


@pytest.fixture(scope="module")
def tc_report(gauss30, gap_g30_mu100):
    xi = energy_gap(gap_g30_mu100)
    return critical_temperature(gauss30, 100.0, TcConfig(), grid=gap_g30_mu100.grid, t_guess=xi / asy.UNIVERSAL_RATIO)


def test_thermal_denominator_limits():
    assert float(thermal_denominator(0.0, 0.3)) == pytest.approx(0.6, rel=1e-15)
    assert float(thermal_denominator(1e-9, 0.3)) == pytest.approx(0.6, rel=1e-12)
    assert float(thermal_denominator(1e6, 1e-9)) == 1e6


@given(st.floats(-1e3, 1e3), st.floats(1e-6, 1e2), st.floats(1.01, 10.0))
def test_thermal_denominator_increasing_in_t(xi, T, factor):
    a, b = float(thermal_denominator(xi, T)), float(thermal_denominator(xi, T * factor))
    assert b >= a * (1 - 1e-14)
    assert a == pytest.approx(float(thermal_denominator(-xi, T)), rel=1e-15)


@given(st.integers(2, 40), st.integers(0, 2**31))
def test_power_iteration_matches_dense_solver(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.uniform(0.0, 1.0, (n, n))
    G = B @ B.T + 0.1
    lam, v = top_eigenvalue(G, tol=1e-13)
    ref = np.linalg.eigvalsh(G)[-1]
    assert lam == pytest.approx(ref, rel=1e-10)
    assert np.linalg.norm(G @ v - lam * v) <= 1e-9 * lam


def test_symmetrised_operator_is_symmetric(gauss30, gap_g30_mu100):
    G = symmetrised_operator(gauss30, gap_g30_mu100.grid, 1e-5)
    assert np.max(np.abs(G - G.T)) <= 1e-14 * np.max(np.abs(G))


def test_zero_potential():
    g = build_grid(100.0, 1e-4, 60.0, 1.0)
    assert linear_lambda_max(RadialPotential.gaussian(0.0), 100.0, 1.0, g) == 0.0
    with pytest.raises(BracketError):
        critical_temperature(RadialPotential.gaussian(0.0), 100.0)


def test_lambda_decreasing_in_temperature(gauss30, gap_g30_mu100, tc_report):
    lams = [linear_lambda_max(gauss30, 100.0, f * tc_report.t_c, gap_g30_mu100.grid) for f in (0.1, 1.0, 10.0)]
    assert lams[0] > lams[1] > lams[2]


def test_report_invariants(tc_report, gap_g30_mu100):
    assert abs(tc_report.lambda_max_at_tc - 1.0) <= 1e-6
    lo, hi = tc_report.bracket
    assert lo < tc_report.t_c < hi
    assert 1.0 <= energy_gap(gap_g30_mu100) / tc_report.t_c <= 2.5


def test_dense_grid_lambda_at_tc(gauss30, gap_g30_mu100, tc_report):
    g = gap_g30_mu100.grid
    dense = build_grid(g.mu, g.s_min, g.cutoff, g.q_scale, g.config.densified(4), q_low=g.q_low)
    assert linear_lambda_max(gauss30, 100.0, tc_report.t_c, dense) == pytest.approx(1.0, abs=1e-4)


def test_grid_refinement(gauss30, tc_report):
    fine = GridConfig().refined(2)
    gap = solve_gap(gauss30, 100.0, SolverConfig(grid=fine))
    rep = critical_temperature(gauss30, 100.0, TcConfig(grid=fine), grid=gap.grid, t_guess=tc_report.t_c)
    assert rep.t_c == pytest.approx(tc_report.t_c, rel=1e-4)


def test_standalone_grid_agrees(gauss30, tc_report):
    rep = critical_temperature(gauss30, 100.0)
    assert rep.t_c == pytest.approx(tc_report.t_c, rel=1e-4)


def test_tc_grows_with_coupling(tc_report):
    weaker = critical_temperature(RadialPotential.gaussian(20.0), 100.0)
    assert weaker.t_c < tc_report.t_c


def test_tc_near_prediction(gauss30, tc_report):
    b = fermi_ops.b_mu(gauss30, 100.0, 0.0).b_mu_kappa
    pred = asy.predict_tc(100.0, b)
    assert 0.8 <= tc_report.t_c / pred <= 1.2


def test_config_validation():
    with pytest.raises(ValueError):
        TcConfig(rel_width=0.0)
    with pytest.raises(ValueError):
        TcConfig(bracket_factor=1.0)
