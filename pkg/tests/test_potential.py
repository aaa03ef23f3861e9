import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from bcsgap.acceptance import kernel_by_angle
from bcsgap.numerics import _leggauss
from bcsgap.potential import (
    BUILTIN_KINDS,
    C3,
    RadialPotential,
    TableParseError,
    Verdict,
    admissibility,
    estimate_critical_exponent,
    evaluate,
    fourier,
    load_table,
)


def sine_transform(V, p):
    """sqrt(2/pi)/p \\int r sin(p r) V(r) dr with QUADPACK's sine weight."""
    f = lambda r: r * float(V(r)) if r > 0 else 0.0
    # far out in p the head sits at the roundoff floor; QUADPACK says so but the value is fine
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        head = sp_integrate.quad(f, 0.0, 10.0 * V.length, weight="sin", wvar=p, epsabs=1e-18, epsrel=1e-12, limit=400)[0]
    tail = sp_integrate.quad(f, 10.0 * V.length, math.inf, weight="sin", wvar=p, epsabs=1e-16)[0]
    return math.sqrt(2.0 / math.pi) * (head + tail) / p


def write_table(tmp_path, r, v, name="v.dat"):
    path = tmp_path / name
    path.write_text("# r V\n" + "\n".join(f"{float(a)!r} {float(b)!r}" for a, b in zip(r, v)) + "\n")
    return path


def test_closed_forms_at_origin():
    assert evaluate(RadialPotential.gaussian(1.0), 0.0) == pytest.approx(-((2 * math.pi) ** -1.5), rel=1e-15)
    assert evaluate(RadialPotential.lorentzian(1.0), 0.0) == pytest.approx(-1.0 / math.pi**2, rel=1e-15)
    assert evaluate(RadialPotential.gaussian(1.0), 0.0) == pytest.approx(-0.063494, abs=1e-6)
    assert evaluate(RadialPotential.lorentzian(1.0), 0.0) == pytest.approx(-0.101321, abs=1e-6)


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_zero_coupling_is_zero(kind):
    V = RadialPotential(kind, 0.0)
    r = np.linspace(0.0, 10.0, 11)
    assert np.all(V(r) == 0.0)
    assert np.all(V.fourier(r) == 0.0)
    assert np.all(V.angular_kernel(r + 0.5, 1.0) == 0.0)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        RadialPotential.gaussian()(-1.0)
    with pytest.raises(ValueError):
        RadialPotential.gaussian().fourier(-1.0)


def test_yukawa_origin_marker():
    assert evaluate(RadialPotential.yukawa(), 0.0) == -math.inf


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
@pytest.mark.parametrize("p", [0.3, 1.0, 2.5, 6.0])
def test_fourier_matches_sine_transform(kind, p):
    V = RadialPotential(kind, 1.0)
    assert fourier(V, p) == pytest.approx(sine_transform(V, p), rel=1e-9, abs=1e-14)


def test_builtin_fourier_closed_forms():
    p = np.linspace(0.0, 5.0, 21)
    np.testing.assert_allclose(RadialPotential.gaussian().fourier(p), -C3 * np.exp(-p * p / 2), rtol=1e-15)
    np.testing.assert_allclose(RadialPotential.yukawa().fourier(p), -C3 / (1 + p * p), rtol=1e-15)


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_fourier_decays(kind):
    V = RadialPotential(kind, 1.0)
    assert abs(fourier(V, 1e3)) < 1e-5 * abs(fourier(V, 0.0))


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_fourier_at_zero_two_ways(kind):
    V = RadialPotential(kind, 1.0)
    f = lambda r: r * r * float(V(r)) if r > 0 else 0.0
    moment = sp_integrate.quad(f, 0, V.length, epsabs=0, epsrel=1e-13)[0] + sp_integrate.quad(f, V.length, math.inf, epsabs=0, epsrel=1e-13)[0]
    lhs = math.sqrt(2 / math.pi) * fourier(V, 0.0)
    rhs = 4 * math.pi * moment / (2 * math.pi**2) * math.sqrt(2 / math.pi) * math.sqrt(math.pi / 2)
    # (2 pi^2)^{-1} 4 pi \int r^2 V = sqrt(2/pi) Vhat(0)
    assert lhs == pytest.approx(4 * math.pi * moment / (2 * math.pi**2), rel=1e-9)
    assert rhs == pytest.approx(lhs, rel=1e-9)


@given(st.sampled_from(BUILTIN_KINDS), st.floats(0.0, 20.0), st.floats(0.01, 100.0))
def test_fourier_linear_in_coupling(kind, p, g):
    a = fourier(RadialPotential(kind, g), p)
    b = g * fourier(RadialPotential(kind, 1.0), p)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@given(st.sampled_from(BUILTIN_KINDS), st.floats(1e-3, 50.0), st.floats(1e-3, 50.0))
def test_angular_kernel_symmetric(kind, p, q):
    V = RadialPotential(kind, 1.0)
    a, b = float(V.angular_kernel(p, q)), float(V.angular_kernel(q, p))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@given(st.sampled_from(BUILTIN_KINDS), st.floats(1e-3, 30.0), st.floats(1e-3, 30.0))
def test_segment_integral_matches_quadrature(kind, a, b):
    a, b = sorted((a, b))
    V = RadialPotential(kind, 1.0)
    ref = sp_integrate.quad(lambda s: s * float(V.fourier(s)), a, b, epsabs=1e-300, epsrel=1e-12)[0]
    assert float(V.segment_integral(a, b)) == pytest.approx(ref, rel=1e-9, abs=1e-15 * (b - a))


def test_angular_kernel_against_legendre_in_cos_theta():
    V = RadialPotential.gaussian(1.0)
    p, q = 3.0, 4.0
    t, w = _leggauss(200)
    ref = 2 * math.pi * np.sum(w * V.fourier(np.sqrt(p * p + q * q - 2 * p * q * t)))
    assert float(V.angular_kernel(p, q)) == pytest.approx(ref, rel=1e-9)
    assert float(V.angular_kernel(p, q)) == pytest.approx(kernel_by_angle(V, p, q), rel=1e-9)


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_angular_kernel_limit_at_zero_momentum(kind):
    V = RadialPotential(kind, 1.0)
    assert float(V.angular_kernel(0.0, 2.0)) == pytest.approx(4 * math.pi * fourier(V, 2.0), rel=1e-12)
    assert float(V.angular_kernel(1e-7, 2.0)) == pytest.approx(4 * math.pi * fourier(V, 2.0), rel=1e-9)


def test_admissibility_gaussian():
    rep = admissibility(RadialPotential.gaussian(1.0))
    assert rep.verdict is Verdict.ADMISSIBLE_UNVERIFIABLE
    assert rep.fourier_at_zero == pytest.approx(-0.063494, abs=1e-6)
    assert rep.s_star_estimate == pytest.approx(3.0, abs=1e-3)
    assert rep.unverified
    assert "verdict" in rep.render()


def test_admissibility_yukawa_exponent():
    rep = admissibility(RadialPotential.yukawa(1.0))
    assert rep.s_star_estimate == pytest.approx(2.0, abs=1e-3)
    assert rep.verdict is Verdict.ADMISSIBLE_UNVERIFIABLE


def test_admissibility_assumed_parts():
    assert admissibility(RadialPotential.lorentzian(1.0), assume_unverifiable=True).verdict is Verdict.ADMISSIBLE_CHECKED


def test_zero_table_rejected():
    r = np.linspace(0.0, 10.0, 20)
    rep = admissibility(RadialPotential.tabulated(r, np.zeros_like(r)))
    assert rep.verdict is Verdict.REJECTED
    assert rep.fourier_at_zero == 0.0


def test_repulsive_table_rejected():
    r = np.linspace(0.0, 12.0, 200)
    rep = admissibility(RadialPotential.tabulated(r, np.exp(-r * r / 2)))
    assert rep.verdict is Verdict.REJECTED
    assert rep.fourier_at_zero > 0


def test_verdict_rejects_positive_fourier_samples():
    # Vhat of a Gaussian difference changes sign: attractive core, repulsive shell
    r = np.linspace(0.0, 15.0, 400)
    v = -np.exp(-r * r / 2) + 0.5 * np.exp(-r * r / 8) / 8
    rep = admissibility(RadialPotential.tabulated(r, v))
    assert rep.verdict is Verdict.REJECTED
    assert not rep.fourier_nonpositive


def test_tabulated_gaussian_matches_builtin(tmp_path):
    r = np.linspace(0.0, 12.0, 600)
    V_tab = RadialPotential.from_file(write_table(tmp_path, r, -C3 * np.exp(-r * r / 2)))
    V = RadialPotential.gaussian(1.0)
    for p in (0.0, 0.5, 1.0, 2.0, 4.0):
        assert fourier(V_tab, p) == pytest.approx(fourier(V, p), rel=1e-6, abs=1e-10)
    assert admissibility(V_tab).verdict is Verdict.ADMISSIBLE_UNVERIFIABLE


def test_tabulated_power_tail(tmp_path):
    r = np.linspace(0.0, 40.0, 800)
    V_tab = RadialPotential.tabulated(r, -1.0 / (math.pi**2 * (1 + r * r) ** 2))
    V = RadialPotential.lorentzian(1.0)
    assert float(V_tab(80.0)) == pytest.approx(float(V(80.0)), rel=3e-2)
    for p in (0.5, 1.0, 3.0):
        assert fourier(V_tab, p) == pytest.approx(fourier(V, p), rel=1e-5)


def test_slow_tail_rejected():
    r = np.linspace(1.0, 100.0, 100)
    with pytest.raises(ValueError, match="tail"):
        RadialPotential.tabulated(r, -1.0 / r**2)


@pytest.mark.parametrize(
    "body,line",
    [
        ("0 1\n1 2 3\n", 2),
        ("0 1\n1 x\n", 2),
        ("0 1\n# comment\n0.5 1\n0.4 1\n", 4),
        ("0 1\n1 nan\n", 2),
        ("-1 1\n", 1),
    ],
)
def test_table_parse_errors_name_line(tmp_path, body, line):
    path = tmp_path / "bad.dat"
    path.write_text(body)
    with pytest.raises(TableParseError) as info:
        load_table(path)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_table_needs_sixteen_rows(tmp_path):
    path = write_table(tmp_path, np.arange(10.0), -np.ones(10))
    with pytest.raises(TableParseError, match="16"):
        load_table(path)


def test_critical_exponent_of_power_laws():
    for a in (0.5, 1.0, 1.5):
        assert estimate_critical_exponent(lambda r, a=a: r ** (-a)) == pytest.approx(3.0 - a, abs=1e-3)


def test_spec_roundtrip():
    V = RadialPotential.yukawa(2.0, 0.5)
    assert V.spec() == {"kind": "yukawa", "coupling": 2.0, "length": 0.5}
    assert V.scaled(3.0).coupling == 3.0
