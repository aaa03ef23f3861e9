import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bcsgap import asymptotics as asy
from bcsgap import fermi_ops
from bcsgap.acceptance import dense_m_integral, dense_rhs
from bcsgap.gap_solver import (
    ConvergenceError,
    GapFunction,
    GridConfig,
    SolverConfig,
    TrivialSolution,
    UnderflowInfeasible,
    build_grid,
    energy_gap,
    gap_rhs,
    kernel_matrix,
    m_integral,
    quasiparticle_energy,
    shifted_residual,
    solve_gap,
)
from bcsgap.potential import BUILTIN_KINDS, RadialPotential


def with_values(gap, values):
    return GapFunction(gap.potential, gap.grid, np.asarray(values, dtype=float), gap.residual, gap.iterations)


def test_grid_invariants(gap_g30_mu100):
    g = gap_g30_mu100.grid
    assert g.near_fermi_count(1e-2) >= 40
    assert np.all(np.diff(g.q) > 0) and np.all(g.weights > 0)
    assert not np.any(g.q == math.sqrt(g.mu))
    assert g.s_min <= max(1e-2 * gap_g30_mu100.at_fermi / g.mu, 1e-14) * (1 + 1e-12)
    assert g.q[-1] < g.cutoff


def test_grid_brackets_fermi_momentum_for_tiny_s_min():
    g = build_grid(100.0, 1e-14, 200.0, 1.0)
    k = 10.0
    assert np.count_nonzero(g.q < k) > 20 and np.count_nonzero(g.q > k) > 20
    assert np.min(np.abs(g.s)) < 1e-13


def test_kernel_matrix_is_non_negative(gap_g30_mu100, gauss30):
    assert np.all(kernel_matrix(gauss30, gap_g30_mu100.grid) >= 0)


def test_rhs_of_zero_is_zero(gap_g30_mu100, gauss30):
    zero = with_values(gap_g30_mu100, np.zeros(gap_g30_mu100.grid.size))
    assert np.all(gap_rhs(gauss30, zero) == 0.0)


@given(st.floats(1e-12, 1.0), st.integers(0, 2**31))
def test_rhs_positive_for_positive_input(scale, seed):
    V = RadialPotential.gaussian(30.0)
    g = build_grid(100.0, 1e-6, 80.0, 1.0)
    rng = np.random.default_rng(seed)
    d = scale * rng.uniform(0.1, 1.0, g.size)
    out = kernel_matrix(V, g) @ (d / quasiparticle_energy(g.xi, d))
    assert np.all(out > 0)


@given(st.floats(-1e6, 1e6), st.floats(0.0, 1e6))
def test_quasiparticle_energy_bounds(x, d):
    e = float(quasiparticle_energy(x, d))
    assert e >= abs(x) and e >= d
    assert e <= abs(x) + d + 1e-9 * (abs(x) + d)


def test_solution_converged_and_positive(gap_g30_mu100):
    assert gap_g30_mu100.residual <= 1e-8
    assert np.all(gap_g30_mu100.values > 0)


def test_shifted_grid_certificate(gap_g30_mu100, gauss30):
    assert shifted_residual(gauss30, gap_g30_mu100) <= 1e-6


def test_interpolant_reproduces_nodes(gap_g30_mu100):
    g = gap_g30_mu100
    np.testing.assert_allclose(g.interpolate(g.grid.q), g.values, rtol=1e-13)


def test_nystrom_reproduces_nodes(gap_g30_mu100):
    g = gap_g30_mu100
    np.testing.assert_allclose(g(g.grid.q), g.values, rtol=1e-9)


def test_unique_from_perturbed_seed(gap_g30_mu100, gauss30):
    other = solve_gap(gauss30, 100.0, SolverConfig(), seed_scale=2.0)
    assert other.at_fermi == pytest.approx(gap_g30_mu100.at_fermi, rel=1e-6)


def test_picard_agrees_with_newton(gauss30):
    a = solve_gap(gauss30, 50.0, SolverConfig())
    b = solve_gap(gauss30, 50.0, SolverConfig(method="picard", tol=1e-12))
    assert b.method == "picard"
    assert b.at_fermi == pytest.approx(a.at_fermi, rel=1e-8)


def test_zero_potential_has_no_gap():
    with pytest.raises(UnderflowInfeasible):
        solve_gap(RadialPotential.gaussian(0.0), 100.0)


def test_feasibility_gate(gauss30):
    with pytest.raises(UnderflowInfeasible, match="coupling"):
        solve_gap(gauss30, 400.0)


def test_weak_coupling_forced_seed_is_not_returned():
    with pytest.raises((TrivialSolution, ConvergenceError)):
        solve_gap(RadialPotential.gaussian(1.0), 100.0, delta_guess=1e-3)


def test_energy_gap_below_fermi_value(gap_g30_mu100):
    xi = energy_gap(gap_g30_mu100)
    assert 0 < xi <= gap_g30_mu100.at_fermi
    assert abs(xi - gap_g30_mu100.at_fermi) / gap_g30_mu100.at_fermi <= 1e-3


@given(st.floats(1e-10, 1.0))
def test_energy_gap_of_constant_profile(d):
    g = build_grid(100.0, 1e-6, 80.0, 1.0)
    gap = GapFunction(RadialPotential.gaussian(30.0), g, np.full(g.size, d), 0.0, 0)
    # the interpolant is constant, so the minimum sits at the Fermi momentum
    assert energy_gap(gap) == pytest.approx(d, rel=1e-15)


def test_m_integral_decreases_when_gap_doubles(gap_g30_mu100):
    doubled = with_values(gap_g30_mu100, 2.0 * gap_g30_mu100.values)
    for kappa in (0.0, 1.0):
        assert m_integral(doubled, kappa) < m_integral(gap_g30_mu100, kappa)


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_m_integral_increasing_in_kappa(gap_g30_mu100, k1, k2):
    lo, hi = sorted((k1, k2))
    assert m_integral(gap_g30_mu100, lo) <= m_integral(gap_g30_mu100, hi) + 1e-12 * abs(m_integral(gap_g30_mu100, hi))


def test_m_integral_matches_prediction(gap_g30_mu100):
    m = m_integral(gap_g30_mu100, 1.0)
    pred = asy.m_prediction(100.0, gap_g30_mu100.at_fermi, 1.0)
    assert abs(m / pred - 1.0) <= 0.02


def test_dense_grid_oracles(gap_g30_mu100, gauss30):
    rhs = gap_rhs(gauss30, gap_g30_mu100)
    assert np.max(np.abs(rhs - dense_rhs(gauss30, gap_g30_mu100)) / rhs) <= 1e-6
    for kappa in (0.0, 1.0):
        assert m_integral(gap_g30_mu100, kappa) == pytest.approx(dense_m_integral(gap_g30_mu100, kappa), rel=1e-6)


def test_grid_refinement_stability(gap_g30_mu100, gauss30):
    fine = solve_gap(gauss30, 100.0, SolverConfig(grid=GridConfig().refined(2)))
    assert energy_gap(fine) == pytest.approx(energy_gap(gap_g30_mu100), rel=1e-4)


def test_gap_grows_with_coupling():
    xis = [energy_gap(solve_gap(RadialPotential.gaussian(g), 100.0)) for g in (25.0, 30.0, 35.0)]
    assert xis[0] < xis[1] < xis[2]


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_birman_schwinger_product(kind):
    V = RadialPotential(kind, 30.0)
    mu = 200.0
    gap = solve_gap(V, mu)
    e = fermi_ops.s_wave_eigenvalue(V, mu)
    assert -1.35 <= m_integral(gap, 1.0) * e <= -0.7


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="bogus")
    with pytest.raises(ValueError):
        GridConfig(nodes=1)
    assert replace(GridConfig(), nodes=8).coarsened().nodes == 4
