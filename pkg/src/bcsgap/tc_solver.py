"""Critical temperature from the linearised finite-temperature gap equation.

At Delta = 0 the finite-temperature equation becomes linear with kernel
``-(2 pi)^{-3/2} q^2 k(p, q) / K_T(q)`` where ``K_T(q) = xi / tanh(xi / 2T)``.
A non-trivial solution exists exactly when the top eigenvalue of the
symmetrised operator reaches one; T_c is located by bisection in log T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics, fermi_ops
from .gap_solver import (
    GridConfig,
    MomentumGrid,
    SolverConfig,
    UnderflowInfeasible,
    _q_scale,
    build_grid,
    kernel_support,
)
from .potential import C3, RadialPotential


class BracketError(RuntimeError):
    """No temperature bracket with lambda_max crossing one was found."""


class StagnationError(RuntimeError):
    pass


class MonotonicityError(RuntimeError):
    """lambda_max failed to decrease with temperature."""


@dataclass(frozen=True)
class TcReport:
    mu: float
    coupling: float
    t_c: float
    lambda_max_at_tc: float
    bisection_iters: int
    bracket: tuple[float, float]


@dataclass(frozen=True)
class TcConfig:
    rel_width: float = 1e-8
    bracket_factor: float = 1e3
    power_tol: float = 1e-12
    power_max_iter: int = 2000
    rayleigh_iter: int = 200
    grid: GridConfig = GridConfig()

    def __post_init__(self):
        if not (self.rel_width > 0 and self.power_tol > 0 and self.bracket_factor > 1):
            raise ValueError("Tc tolerances must be positive and the bracket factor above 1")


def thermal_denominator(xi, T: float):
    """xi / tanh(xi / 2T), equal to 2T at xi = 0, computed without overflow."""
    xi = np.asarray(xi, dtype=float)
    x = xi / (2.0 * T)
    ax = np.abs(x)
    small = ax < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.abs(xi) / np.tanh(np.where(small, 1.0, ax))
    return np.where(small, 2.0 * T * (1.0 + ax * ax / 3.0), big)


def base_matrix(V: RadialPotential, grid: MomentumGrid) -> np.ndarray:
    """-(2 pi)^{-3/2} sqrt(w_i w_j) p_i p_j k(p_i, p_j); symmetric by construction."""
    sw = np.sqrt(grid.weights) * grid.q
    kern = V.angular_kernel(grid.q[:, None], grid.q[None, :])
    A = -C3 * kern * sw[:, None] * sw[None, :]
    # k is symmetric analytically; enforce it bitwise
    return 0.5 * (A + A.T)


def symmetrised_operator(V: RadialPotential, grid: MomentumGrid, T: float, base: np.ndarray | None = None) -> np.ndarray:
    A = base_matrix(V, grid) if base is None else base
    d = 1.0 / np.sqrt(thermal_denominator(grid.xi, T))
    return A * d[:, None] * d[None, :]


def _start_vector(n: int) -> np.ndarray:
    v = np.ones(n)
    return v / np.linalg.norm(v)


def top_eigenvalue(G: np.ndarray, v0: np.ndarray | None = None, tol: float = 1e-12, max_iter: int = 2000,
                   rayleigh_iter: int = 200) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a symmetric non-negative matrix by power iteration.

    Stops when the eigen-residual ||G v - lam v|| falls below tol * |lam|.
    If that never happens, a Rayleigh-quotient refinement is attempted.
    """
    n = G.shape[0]
    if not np.any(G):
        return 0.0, _start_vector(n)
    v = _start_vector(n) if v0 is None else v0 / np.linalg.norm(v0)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam = float(v @ w)
        r = np.linalg.norm(w - lam * v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        if r <= tol * abs(lam):
            return lam, w / nw
        v = w / nw
    # Rayleigh quotient iteration from the last iterate
    for _ in range(rayleigh_iter):
        try:
            w = np.linalg.solve(G - lam * np.eye(n) * (1.0 + 1e-13), v)
        except np.linalg.LinAlgError:
            return lam, v
        v = w / np.linalg.norm(w)
        Gv = G @ v
        lam = float(v @ Gv)
        if np.linalg.norm(Gv - lam * v) <= tol * abs(lam):
            return lam, v
    raise StagnationError(f"power iteration stagnated at lambda = {lam:.12g}")


def linear_lambda_max(V: RadialPotential, mu: float, T: float, grid: MomentumGrid, tol: float = 1e-10) -> float:
    if not T > 0:
        raise ValueError("temperature must be positive")
    if V.coupling == 0.0:
        return 0.0
    lam, _ = top_eigenvalue(symmetrised_operator(V, grid, T), tol=tol)
    return lam


def tc_grid(V: RadialPotential, mu: float, t_scale: float, config: GridConfig = GridConfig()) -> MomentumGrid:
    """Grid whose innermost shell panel is well below the thermal width T/mu."""
    q_low, cutoff = kernel_support(V, mu, config)
    return build_grid(mu, config.inner_factor * t_scale / mu, cutoff, _q_scale(V), config, q_low=q_low)


def predicted_tc(V: RadialPotential, mu: float, kappa: float = 1.0) -> float:
    e = fermi_ops.s_wave_eigenvalue(V, mu)
    if not e < 0:
        raise UnderflowInfeasible(f"Fermi-sphere eigenvalue e_mu = {e:.3e} is not negative")
    b = fermi_ops.b_mu(V, mu, kappa, e).b_mu_kappa
    pred = asymptotics.predict_tc(mu, b, kappa)
    if pred.underflow or pred == 0.0:
        raise UnderflowInfeasible("predicted critical temperature underflows")
    return float(pred)


def critical_temperature(
    V: RadialPotential,
    mu: float,
    config: TcConfig = TcConfig(),
    grid: MomentumGrid | None = None,
    t_guess: float | None = None,
) -> TcReport:
    """Temperature where the top eigenvalue of the linearised operator is one."""
    if V.coupling == 0.0:
        raise BracketError("zero potential has no critical temperature")
    t0 = predicted_tc(V, mu) if t_guess is None else float(t_guess)
    if grid is None:
        grid = tc_grid(V, mu, t0, config.grid)
    A = base_matrix(V, grid)
    state = {"v": None}

    def lam(T):
        G = symmetrised_operator(V, grid, T, A)
        val, vec = top_eigenvalue(G, state["v"], config.power_tol, config.power_max_iter, config.rayleigh_iter)
        state["v"] = vec
        return val

    lo, hi = t0 / config.bracket_factor, t0 * config.bracket_factor
    f_lo, f_hi = lam(lo), lam(hi)
    for _ in range(40):
        if f_lo > 1.0:
            break
        if lo < 1e-300 * mu:
            raise BracketError("lambda_max stays below one as T -> 0; the gap underflows")
        hi, f_hi = lo, f_lo
        lo /= config.bracket_factor
        f_lo = lam(lo)
    else:
        raise BracketError("could not find a temperature with lambda_max > 1")
    for _ in range(40):
        if f_hi < 1.0:
            break
        lo, f_lo = hi, f_hi
        hi *= config.bracket_factor
        f_hi = lam(hi)
    else:
        raise BracketError("could not find a temperature with lambda_max < 1")
    if not f_lo > f_hi:
        raise MonotonicityError(f"lambda_max not decreasing: {f_lo} at {lo}, {f_hi} at {hi}")
    bracket = (lo, hi)
    iters = 0
    while hi / lo - 1.0 > config.rel_width:
        mid = math.sqrt(lo * hi)
        f_mid = lam(mid)
        if not (f_hi <= f_mid <= f_lo):
            raise MonotonicityError(f"lambda_max not monotone near T = {mid:.6e}")
        if f_mid > 1.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        iters += 1
    # interpolate the crossing in log T inside the final bracket
    if f_lo != f_hi:
        frac = (f_lo - 1.0) / (f_lo - f_hi)
        tc = math.exp(math.log(lo) + frac * (math.log(hi) - math.log(lo)))
    else:
        tc = math.sqrt(lo * hi)
    return TcReport(float(mu), V.coupling, tc, lam(tc), iters, bracket)
