"""Spectral data of the interaction restricted to the Fermi sphere.

The Fermi-sphere operator acts on L^2(S^2) with kernel
``(2 pi)^{-3/2} Vhat(sqrt(mu) (p - q))``. Its eigenfunctions are spherical
harmonics with eigenvalues

    e_ell = (2/pi) \\int_0^inf r^2 V(r) j_ell(sqrt(mu) r)^2 dr.

The second-order form is evaluated on the constant harmonic only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import _leggauss, adaptive_integrate, spherical_bessel_table
from .potential import C3, SQRT_2_OVER_PI, RadialPotential

DEFAULT_LMAX = 60
INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)
_NODES = 16
_OSC_REACH = 2.0e4  # k R reached by per-period panels for power-law tails
_CHUNK = 4096


@dataclass(frozen=True)
class SphericalSpectrum:
    mu: float
    eigenvalues: tuple[float, ...]
    e_mu: float
    trace_partial: float
    trace_target: float

    @property
    def lmax(self) -> int:
        return len(self.eigenvalues) - 1

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.eigenvalues))

    @property
    def trace_relative_error(self) -> float:
        if self.trace_target == 0.0:
            return abs(self.trace_partial)
        return abs(self.trace_partial / self.trace_target - 1.0)


@dataclass(frozen=True)
class SecondOrderData:
    mu: float
    kappa: float
    e_mu: float
    w_expect: float
    b_mu_kappa: float


def _radial_rule(V: RadialPotential, k: float) -> tuple[np.ndarray, np.ndarray, float | None]:
    """Nodes and weights on [0, R] resolving both V and the Bessel oscillation.

    Returns ``(r, w, R_tail)``; when ``R_tail`` is not None the remaining
    integral over [R_tail, inf) is handled by its oscillation average.
    """
    R, power = V.radial_cutoff
    h = min(math.pi / k, 0.5 * V.core_length)
    tail_start = None
    if power is not None:
        R = max(R, _OSC_REACH / k, 100.0 * V.length)
        tail_start = R
    if V.kind == "tabulated":
        # panel edges include the table knots so the interpolant's kinks are resolved
        knots = V._table_r
        fine = np.arange(0.0, R, h)
        edges = np.unique(np.concatenate([fine, knots[knots < R], [R]]))
    else:
        n = max(int(math.ceil(R / h)), 1)
        edges = np.linspace(0.0, R, n + 1)
    x, w = _leggauss(_NODES)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel(), tail_start


def _eigenvalue_table(V: RadialPotential, mu: float, lmax: int) -> np.ndarray:
    if not mu > 0:
        raise ValueError("mu must be positive")
    if V.coupling == 0.0:
        return np.zeros(lmax + 1)
    k = math.sqrt(mu)
    r, w, tail_start = _radial_rule(V, k)
    weight = w * r * r * np.asarray(V(r), dtype=float)
    if not np.all(np.isfinite(weight)):
        raise ArithmeticError("non-finite potential value on the radial grid")
    acc = np.zeros(lmax + 1)
    for i in range(0, r.size, _CHUNK):
        J = spherical_bessel_table(lmax, k * r[i : i + _CHUNK])
        acc += (J * J) @ weight[i : i + _CHUNK]
    out = (2.0 / math.pi) * acc
    if tail_start is not None:
        # j_ell(x)^2 averages to 1/(2 x^2) far beyond the turning point
        tail = adaptive_integrate(lambda t: np.asarray(V(t), dtype=float), tail_start, math.inf, tol=1e-16)
        out += tail / (math.pi * mu)
    return out


def ell_eigenvalue(V: RadialPotential, mu: float, ell: int) -> float:
    """Eigenvalue of the Fermi-sphere operator on the degree-ell harmonics."""
    if int(ell) != ell or ell < 0:
        raise ValueError("ell must be a non-negative integer")
    return float(_eigenvalue_table(V, mu, int(ell))[int(ell)])


def s_wave_eigenvalue(V: RadialPotential, mu: float) -> float:
    """The ell = 0 eigenvalue from the momentum representation,
    ``(2 pi)^{-3/2} (2 pi / mu) \\int_0^{2 sqrt(mu)} s Vhat(s) ds``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return float(C3 * 2.0 * math.pi / mu * V.segment_integral(0.0, 2.0 * math.sqrt(mu)))


def spectrum(V: RadialPotential, mu: float, lmax: int = DEFAULT_LMAX) -> SphericalSpectrum:
    if lmax < 8:
        raise ValueError("lmax must be at least 8")
    ev = _eigenvalue_table(V, mu, lmax)
    if not np.all(np.isfinite(ev)):
        bad = int(np.flatnonzero(~np.isfinite(ev))[0])
        raise ArithmeticError(f"eigenvalue for ell = {bad} is not finite")
    ells = np.arange(lmax + 1)
    trace = math.fsum((2 * ells + 1) * ev)
    return SphericalSpectrum(
        mu=float(mu),
        eigenvalues=tuple(float(x) for x in ev),
        e_mu=float(np.min(ev)),
        trace_partial=trace,
        trace_target=SQRT_2_OVER_PI * float(V.fourier(0.0)),
    )


def phi_hat_radial(V: RadialPotential, mu: float, rho):
    """Fourier-side image of the constant harmonic at |p| = sqrt(mu) rho."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    k = math.sqrt(mu)
    out = C3 * INV_SQRT_4PI * V.angular_kernel(k * rho, k)
    return float(out) if out.ndim == 0 else out


def fermi_profile(V: RadialPotential, mu: float, rho):
    """Angular integral of |phi_hat|^2 on the sphere of radius sqrt(mu) rho."""
    k = math.sqrt(mu)
    kern = C3 * V.angular_kernel(k * np.asarray(rho, dtype=float), k)
    return kern * kern


def _panels_geometric(lo: float, hi: float, per_decade: int) -> np.ndarray:
    n = max(int(math.ceil(per_decade * math.log10(hi / lo))), 1)
    return np.geomspace(lo, hi, n + 1)


def _gl_on(edges: np.ndarray, n: int = _NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leggauss(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel()


def w_integrand(V: RadialPotential, mu: float, kappa: float, rho):
    """Combined radial integrand of the second-order form (without sqrt(mu))."""
    rho = np.asarray(rho, dtype=float)
    A = fermi_profile(V, mu, rho)
    A1 = float(fermi_profile(V, mu, 1.0))
    r2 = rho * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        return r2 * ((A - A1) / np.abs(r2 - 1.0) + A1 / (r2 + kappa * kappa))


def w_expectation(V: RadialPotential, mu: float, kappa: float, offset: float = 1e-8) -> float:
    """<u|W|u> for the constant harmonic u.

    On [0, 2] the two terms are kept in one integrand so the 1/|rho^2 - 1|
    singularities cancel. Beyond rho = 2 the constant part is integrated in
    closed form.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if V.coupling == 0.0:
        return 0.0
    A1 = float(fermi_profile(V, mu, 1.0))
    d_edges = _panels_geometric(offset, 1.0, 4)
    d, wd = _gl_on(d_edges)
    inner = math.fsum(wd * w_integrand(V, mu, kappa, 1.0 - d)) + math.fsum(wd * w_integrand(V, mu, kappa, 1.0 + d))
    # |rho - 1| < offset: the difference quotients cancel to first order
    inner += 2.0 * offset * A1 / (1.0 + kappa * kappa)
    # rho >= 2: rho^2 A / (rho^2 - 1) numerically, the A1 part analytically
    t_edges = _panels_geometric(1.0, 1e8, 4)
    t, wt = _gl_on(t_edges)
    rho = 1.0 + t
    A = fermi_profile(V, mu, rho)
    outer = math.fsum(wt * rho * rho * A / ((rho - 1.0) * (rho + 1.0)))
    outer -= A1 * (math.atanh(0.5) + kappa * math.atan2(kappa, 2.0))
    return math.sqrt(mu) * (inner + outer)


def difference_quotient_probe(V: RadialPotential, mu: float, eps: float = 1e-6) -> tuple[float, float, float]:
    """Left/right limits of (A(rho) - A(1)) / |rho^2 - 1| at rho = 1 and the
    centred-difference value A'(1)/2 they should approach in magnitude."""
    A1 = float(fermi_profile(V, mu, 1.0))
    lo = 1.0 - eps
    hi = 1.0 + eps
    left = (float(fermi_profile(V, mu, lo)) - A1) / (1.0 - lo * lo)
    right = (float(fermi_profile(V, mu, hi)) - A1) / (hi * hi - 1.0)
    deriv = (float(fermi_profile(V, mu, hi)) - float(fermi_profile(V, mu, lo))) / (2.0 * eps)
    return left, right, 0.5 * deriv


def b_mu(V: RadialPotential, mu: float, kappa: float = 1.0, e_mu: float | None = None) -> SecondOrderData:
    """``(pi/2)(e_mu - <u|W|u>)`` at the given kappa."""
    if e_mu is None:
        e_mu = s_wave_eigenvalue(V, mu)
    w = w_expectation(V, mu, kappa)
    return SecondOrderData(float(mu), float(kappa), float(e_mu), w, 0.5 * math.pi * (e_mu - w))
