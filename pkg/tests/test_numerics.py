import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from bcsgap.numerics import (
    MAX_ELL,
    Interpolant1D,
    QuadratureError,
    QuadratureRule,
    adaptive_integrate,
    composite_gauss_legendre,
    gauss_legendre,
    integrate,
    semi_infinite,
    spherical_bessel,
    spherical_bessel_table,
)
from bcsgap.numerics import _miller, _upward


def series_j(ell, x, terms=80):
    """Power series j_l(x) = x^l sum_k (-x^2/2)^k / (k! (2l+2k+1)!!), in extended precision."""
    total = 0.0
    x2 = x * x / 2.0
    term = x**ell / math.prod(range(1, 2 * ell + 2, 2))
    for k in range(terms):
        total += term
        term *= -x2 / ((k + 1) * (2 * ell + 2 * k + 3))
    return total


@pytest.mark.parametrize("ell,x,expected", [(0, 0.0, 1.0), (1, 0.0, 0.0), (0, math.pi, 0.0)])
def test_bessel_special_values(ell, x, expected):
    assert spherical_bessel(ell, x) == pytest.approx(expected, abs=1e-15)


def test_bessel_5_10_against_series():
    assert abs(spherical_bessel(5, 10.0) - series_j(5, 10.0)) <= 1e-12


def test_bessel_against_scipy_table():
    x = np.linspace(0.01, 120.0, 500)
    tab = spherical_bessel_table(60, x)
    for ell in (0, 1, 2, 7, 30, 60):
        ref = special.spherical_jn(ell, x)
        assert np.max(np.abs(tab[ell] - ref)) <= 1e-12


def test_upward_and_miller_agree_where_both_apply():
    x = np.geomspace(0.1, 100.0, 200)
    up = _upward(60, x)
    down = _miller(60, x)
    for ell in range(61):
        ok = x > ell + 1
        if not np.any(ok):
            continue
        scale = np.maximum(np.abs(down[ell, ok]), 1e-3)
        assert np.max(np.abs(up[ell, ok] - down[ell, ok]) / scale) <= 1e-11


@given(st.integers(0, 60), st.floats(0.0, 500.0))
def test_bessel_envelope(ell, x):
    v = spherical_bessel(ell, x)
    assert abs(v) <= 1.0 + 1e-15
    if x >= 1.0:
        assert abs(v) <= 1.2 * x ** (-5.0 / 6.0)


def test_bessel_domain_errors():
    with pytest.raises(ValueError):
        spherical_bessel(0, -1.0)
    with pytest.raises(ValueError):
        spherical_bessel(MAX_ELL + 1, 1.0)
    with pytest.raises(ValueError):
        spherical_bessel(-1, 1.0)


def test_integrate_constant_and_square():
    assert integrate(lambda x: np.ones_like(x), gauss_legendre(8, 0.0, 2.0)) == pytest.approx(2.0, rel=1e-14)
    assert integrate(lambda x: x * x, gauss_legendre(4, 0.0, 1.0)) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_integrate_exponential_on_half_line():
    assert integrate(lambda x: np.exp(-x), semi_infinite()) == pytest.approx(1.0, abs=1e-10)


def test_integrate_reports_offending_node():
    with pytest.raises(QuadratureError, match="node"), np.errstate(divide="ignore"):
        integrate(lambda x: 1.0 / (x - x[3]), gauss_legendre(8, 0.0, 1.0))


@given(st.floats(-50, 50), st.floats(1e-3, 100), st.integers(1, 30), st.integers(1, 12))
def test_composite_rule_invariants(a, width, panels, n):
    rule = composite_gauss_legendre(np.linspace(a, a + width, panels + 1), n)
    assert np.all(rule.weights > 0)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all((rule.nodes > a) & (rule.nodes < a + width))
    assert integrate(lambda x: np.ones_like(x), rule) == pytest.approx(width, rel=1e-12)


def test_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.2, 0.1]), np.array([0.5, 0.5]), (0.0, 1.0))
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.1, 0.2]), np.array([0.5, -0.5]), (0.0, 1.0))


def test_quadrature_bitwise_reproducible():
    f = lambda x: np.sin(3 * x) * np.exp(-x)
    a = integrate(f, composite_gauss_legendre(np.linspace(0, 5, 11), 16))
    b = integrate(f, composite_gauss_legendre(np.linspace(0, 5, 11), 16))
    assert a == b
    assert adaptive_integrate(f, 0.0, 5.0) == adaptive_integrate(f, 0.0, 5.0)


def test_adaptive_inverse_sqrt():
    val = adaptive_integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, tol=1e-9, singular_points=[0.0])
    assert val == pytest.approx(2.0, abs=1e-9)


def test_adaptive_zero():
    assert adaptive_integrate(lambda x: np.zeros_like(x), 0.0, 1.0) == 0.0


def test_adaptive_gaussian_moment_to_infinity():
    val = adaptive_integrate(lambda r: r * r * np.exp(-r * r / 2), 0.0, math.inf, tol=1e-11)
    assert val == pytest.approx(math.sqrt(math.pi / 2), abs=1e-9)


@pytest.mark.parametrize("c", [0.1, 0.5, 0.9])
def test_adaptive_interior_singularity(c):
    f = lambda x: 1.0 / np.sqrt(np.abs(x - c))
    exact = 2 * math.sqrt(c) + 2 * math.sqrt(1 - c)
    assert adaptive_integrate(f, 0.0, 1.0, tol=1e-10, singular_points=[c]) == pytest.approx(exact, abs=1e-9)


def test_adaptive_failure_names_interval():
    with pytest.raises(QuadratureError) as info:
        adaptive_integrate(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, tol=1e-14, max_depth=6)
    assert info.value.interval is not None


def test_adaptive_rejects_bad_interval():
    with pytest.raises(ValueError):
        adaptive_integrate(lambda x: x, 1.0, 0.0)
    with pytest.raises(ValueError):
        adaptive_integrate(lambda x: x, 0.0, 1.0, tol=0.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30), st.data())
def test_interpolant_knots_and_monotone_bounds(values, data):
    knots = np.cumsum(np.arange(1, len(values) + 1, dtype=float))
    f = Interpolant1D(knots, np.array(values))
    assert np.array_equal(f(knots), np.array(values))
    i = data.draw(st.integers(0, len(values) - 2))
    t = data.draw(st.floats(0.0, 1.0))
    x = knots[i] + t * (knots[i + 1] - knots[i])
    lo, hi = sorted((values[i], values[i + 1]))
    span = max(hi - lo, 1.0)
    assert lo - 1e-9 * span <= float(f(x)) <= hi + 1e-9 * span


def test_interpolant_validation():
    with pytest.raises(ValueError):
        Interpolant1D(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    assert Interpolant1D(np.arange(4.0), np.arange(4.0)).coefficients.shape == (4, 3)
