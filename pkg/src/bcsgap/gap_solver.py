"""Zero-temperature gap equation on a radial momentum grid.

The gap equation for a radial gap reads

    Delta(p) = -(2 pi)^{-3/2} \\int_0^inf q^2 k(p, q) Delta(q) / E(q) dq,
    E(q) = sqrt((q^2 - mu)^2 + Delta(q)^2),

with k the angular average of Vhat. It is discretised by Nystrom's method
on a grid that resolves the logarithmic Fermi-shell singularity through
the variable s = (q^2 - mu) / mu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from . import asymptotics, fermi_ops
from .numerics import _leggauss
from .potential import C3, RadialPotential


class UnderflowInfeasible(RuntimeError):
    """The predicted gap is too small to represent on a double-precision grid."""


class TrivialSolution(RuntimeError):
    """The iteration collapsed to the zero solution."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class GridConfig:
    nodes: int = 16
    panels_per_decade: int = 2
    inner_factor: float = 1e-2  # s_min relative to the expected Delta/mu
    s_floor: float = 1e-14
    s_pos_max: float = 1.0
    s_neg_max: float = 0.5
    q_width: float = 1.0  # largest panel width in q, in units of 1/core_length
    outer_ratio: float = 1.15
    cutoff_rel: float = 1e-12  # kernel decay defining the outer cutoff
    floor_rel: float = 1e-30  # kernel decay defining the inner cutoff

    def __post_init__(self):
        if self.nodes < 2 or self.panels_per_decade < 1:
            raise ValueError("grid needs at least two nodes and one panel per decade")
        for name in ("inner_factor", "s_floor", "s_pos_max", "s_neg_max", "q_width", "cutoff_rel", "floor_rel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.s_neg_max < 1.0:
            raise ValueError("s_neg_max must be below 1")
        if not self.outer_ratio > 1.0:
            raise ValueError("outer_ratio must exceed 1")

    def refined(self, factor: int = 2) -> "GridConfig":
        """Same layout with ``factor`` times as many near-Fermi panels."""
        return replace(self, panels_per_decade=self.panels_per_decade * factor)

    def coarsened(self, factor: int = 2) -> "GridConfig":
        """Fewer Gauss-Legendre nodes per panel."""
        return replace(self, nodes=max(self.nodes // factor, 2))

    def densified(self, factor: int = 4) -> "GridConfig":
        """``factor`` times as many panels in every region."""
        return replace(
            self,
            panels_per_decade=self.panels_per_decade * factor,
            q_width=self.q_width / factor,
            outer_ratio=1.0 + (self.outer_ratio - 1.0) / factor,
        )


@dataclass(frozen=True)
class SolverConfig:
    method: str = "newton"
    tol: float = 1e-10
    max_iter: int = 60
    theta: float = 0.5
    picard_max_iter: int = 500
    min_gap_ratio: float = 1e-12  # feasibility gate on the predicted Delta/mu
    kappa_seed: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)

    def __post_init__(self):
        if self.method not in ("newton", "picard"):
            raise ValueError("method must be 'newton' or 'picard'")
        if not self.tol > 0 or not self.min_gap_ratio > 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")


@dataclass(frozen=True)
class MomentumGrid:
    mu: float
    q: np.ndarray
    weights: np.ndarray  # dq weights
    xi: np.ndarray  # q^2 - mu, computed without cancellation
    s_min: float
    cutoff: float
    q_low: float
    panels: tuple[tuple[str, float, float], ...]
    config: GridConfig
    q_scale: float

    @property
    def nodes_per_panel(self) -> int:
        return self.config.nodes

    @property
    def size(self) -> int:
        return self.q.size

    @property
    def s(self) -> np.ndarray:
        return self.xi / self.mu

    def near_fermi_count(self, band: float = 1e-2) -> int:
        return int(np.count_nonzero(np.abs(self.s) <= band))


def _split(kind: str, a: float, b: float, width_q, max_width: float) -> list[tuple[str, float, float]]:
    m = max(int(math.ceil(width_q(a, b) / max_width)), 1)
    e = np.linspace(a, b, m + 1)
    return [(kind, float(x), float(y)) for x, y in zip(e[:-1], e[1:])]


def _shift_edges(edges: np.ndarray) -> np.ndarray:
    """Keep the end points, move interior edges to the midpoints."""
    if edges.size <= 2:
        return edges
    mids = 0.5 * (edges[:-1] + edges[1:])
    return np.concatenate([[edges[0]], mids, [edges[-1]]])


def build_grid(
    mu: float,
    s_min: float,
    cutoff: float,
    q_scale: float,
    config: GridConfig = GridConfig(),
    shifted: bool = False,
    q_low: float = 0.0,
) -> MomentumGrid:
    """Nystrom grid: log-spaced panels in s around the Fermi sphere,
    uniform q panels inside, geometric q panels outside up to ``cutoff``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    k = math.sqrt(mu)
    s_min = max(float(s_min), config.s_floor)
    max_w = config.q_width * q_scale
    if not cutoff > k:
        raise ValueError("cutoff must exceed sqrt(mu)")
    q_low = max(float(q_low), 0.0)
    if not q_low < k:
        raise ValueError("q_low must lie below sqrt(mu)")
    s_top = min(config.s_pos_max, (cutoff - k) * (cutoff + k) / mu)
    s_bottom = min(config.s_neg_max, (k - q_low) * (k + q_low) / mu)
    s_min = min(s_min, 0.5 * s_top, 0.5 * s_bottom)

    def q_of_s(s):
        return k * math.sqrt(1.0 + s)

    def s_width(a, b):
        return abs(q_of_s(b) - q_of_s(a))

    def log_edges(top):
        n = max(int(math.ceil(config.panels_per_decade * math.log10(top / s_min))), 1)
        e = np.concatenate([[0.0], np.geomspace(s_min, top, n + 1)])
        return _shift_edges(e) if shifted else e

    panels: list[tuple[str, float, float]] = []
    # inside the Fermi ball, away from the shell
    q_in = q_of_s(-s_bottom)
    if q_in > q_low * (1.0 + 1e-12):
        n_in = max(int(math.ceil((q_in - q_low) / max_w)), 2)
        e = np.linspace(q_low, q_in, n_in + 1)
        if shifted:
            e = _shift_edges(e)
        panels += [("q", float(a), float(b)) for a, b in zip(e[:-1], e[1:])]
    # below the shell, ordered by increasing q
    e = log_edges(s_bottom)[::-1]
    for a, b in zip(e[:-1], e[1:]):
        panels += _split("s", -float(a), -float(b), s_width, max_w)
    # above the shell
    e = log_edges(s_top)
    for a, b in zip(e[:-1], e[1:]):
        panels += _split("s", float(a), float(b), s_width, max_w)
    # outer region
    q0 = q_of_s(s_top)
    if cutoff > q0 * (1.0 + 1e-12):
        edges = [q0]
        while edges[-1] < cutoff:
            step = max(max_w, (config.outer_ratio - 1.0) * edges[-1])
            edges.append(min(edges[-1] + step, cutoff))
        e = np.asarray(edges)
        if shifted:
            e = _shift_edges(e)
        panels += [("q", float(a), float(b)) for a, b in zip(e[:-1], e[1:])]

    x, w = _leggauss(config.nodes)
    qs, ws, xis = [], [], []
    for kind, a, b in panels:
        half = 0.5 * (b - a)
        t = a + half * (x + 1.0)
        if kind == "s":
            q = k * np.sqrt(1.0 + t)
            qs.append(q)
            ws.append(half * w * mu / (2.0 * q))
            xis.append(mu * t)
        else:
            qs.append(t)
            ws.append(half * w)
            xis.append((t - k) * (t + k))
    q = np.concatenate(qs)
    order = np.argsort(q, kind="stable")
    return MomentumGrid(
        mu=float(mu),
        q=q[order],
        weights=np.concatenate(ws)[order],
        xi=np.concatenate(xis)[order],
        s_min=s_min,
        cutoff=float(cutoff),
        q_low=float(q_low),
        panels=tuple(panels),
        config=config,
        q_scale=float(q_scale),
    )


def angular_kernel(V: RadialPotential, p, q):
    """Integral of Vhat(|p e_z - q w|) over w in the unit sphere."""
    out = V.angular_kernel(p, q)
    return float(out) if np.ndim(out) == 0 else out


def quasiparticle_energy(xi, delta):
    """sqrt(xi^2 + delta^2) without overflow or underflow."""
    return np.hypot(xi, delta)


def kernel_matrix(V: RadialPotential, grid: MomentumGrid, p=None) -> np.ndarray:
    """K[i, j] = -(2 pi)^{-3/2} w_j q_j^2 k(p_i, q_j) (non-negative when Vhat <= 0)."""
    p = grid.q if p is None else np.asarray(p, dtype=float)
    kern = V.angular_kernel(p[:, None], grid.q[None, :])
    return -C3 * kern * (grid.weights * grid.q**2)[None, :]


@dataclass(frozen=True)
class GapFunction:
    potential: RadialPotential
    grid: MomentumGrid
    values: np.ndarray
    residual: float
    iterations: int
    method: str = "newton"

    @property
    def mu(self) -> float:
        return self.grid.mu

    @property
    def log_values(self) -> np.ndarray:
        return np.log(self.values)

    @cached_property
    def energies(self) -> np.ndarray:
        return quasiparticle_energy(self.grid.xi, self.values)

    def __call__(self, p):
        """Nystrom interpolation: the right-hand side evaluated at p."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        K = kernel_matrix(self.potential, self.grid, p)
        out = K @ (self.values / self.energies)
        return out

    @cached_property
    def _log_interp(self):
        # nodes closer than double precision in s coincide in q; keep one of each
        q, first = np.unique(self.grid.q, return_index=True)
        return CubicSpline(q, np.log(self.values[first]), extrapolate=True)

    def interpolate(self, p):
        """Cubic spline of log Delta in q: cheap, positive, accurate to ~1e-8 between nodes."""
        return np.exp(self._log_interp(np.asarray(p, dtype=float)))

    @property
    def at_fermi(self) -> float:
        """Delta(sqrt(mu)) from the interpolant."""
        return float(self.interpolate(math.sqrt(self.mu)))


def gap_rhs(V: RadialPotential, gap: GapFunction) -> np.ndarray:
    """T(Delta) on the gap's own grid."""
    return kernel_matrix(V, gap.grid) @ (gap.values / gap.energies)


def _rhs(K: np.ndarray, xi: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return K @ (delta / quasiparticle_energy(xi, delta))


def _feasibility(V: RadialPotential, mu: float, config: SolverConfig) -> float:
    """Predicted Delta at the Fermi momentum, or raise if it underflows."""
    e = fermi_ops.s_wave_eigenvalue(V, mu)
    if not e < 0:
        raise UnderflowInfeasible(f"Fermi-sphere eigenvalue e_mu = {e:.3e} is not negative; no gap")
    kappa = config.kappa_seed
    b = fermi_ops.b_mu(V, mu, kappa, e).b_mu_kappa
    if not b < 0:
        raise UnderflowInfeasible(f"second-order eigenvalue {b:.3e} is not negative at mu = {mu}")
    pred = asymptotics.predict_xi(mu, b, kappa)
    if pred.underflow or pred / mu < config.min_gap_ratio:
        raise UnderflowInfeasible(
            f"predicted Delta/mu = {float(pred) / mu:.3e} is below {config.min_gap_ratio:g}; "
            "raise the coupling g"
        )
    return float(pred)


_LOG_TINY = math.log(np.finfo(float).tiny) + 50.0


def _newton(K, xi, delta, tol, max_iter):
    u = np.log(delta)
    for it in range(1, max_iter + 1):
        d = np.exp(u)
        T = _rhs(K, xi, d)
        if not np.all(T > 0):
            raise TrivialSolution("right-hand side lost positivity")
        F = u - np.log(T)
        res = float(np.max(np.abs(F)))
        if res <= tol:
            return d, res, it
        E = quasiparticle_energy(xi, d)
        dfdu = d * xi * xi / E**3
        J = np.eye(u.size) - (K * dfdu[None, :]) / T[:, None]
        step = np.linalg.solve(J, -F)
        if np.max(u + step) < _LOG_TINY:
            raise TrivialSolution("gap collapsed towards zero")
        lam = 1.0
        while True:
            un = u + lam * step
            with np.errstate(over="ignore", invalid="ignore"):
                Tn = _rhs(K, xi, np.exp(un))
            if np.all(Tn > 0) and np.all(np.isfinite(Tn)):
                rn = float(np.max(np.abs(un - np.log(Tn))))
                if rn < (1.0 - 1e-4 * lam) * res or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise ConvergenceError("line search failed", res, it)
        u = un
        if np.max(u) < _LOG_TINY:
            raise TrivialSolution("gap collapsed towards zero")
    d = np.exp(u)
    res = float(np.max(np.abs(u - np.log(_rhs(K, xi, d)))))
    if res <= tol:
        return d, res, max_iter
    raise ConvergenceError("Newton iteration did not converge", res, max_iter)


def _picard(K, xi, delta, tol, max_iter, theta):
    d = delta
    res = math.inf
    for it in range(1, max_iter + 1):
        T = _rhs(K, xi, d)
        if not np.all(T > 0):
            raise TrivialSolution("right-hand side lost positivity")
        new = (1.0 - theta) * d + theta * T
        step = float(np.max(np.abs(new - d) / d))
        d = new
        if float(np.max(d)) < 1e-300:
            raise TrivialSolution("gap collapsed towards zero")
        if step <= tol:
            res = float(np.max(np.abs(d - _rhs(K, xi, d)) / d))
            return d, res, it
    res = float(np.max(np.abs(d - _rhs(K, xi, d)) / d))
    raise ConvergenceError("damped fixed-point iteration did not converge", res, max_iter)


def solve_on_grid(V: RadialPotential, grid: MomentumGrid, seed: np.ndarray, config: SolverConfig) -> GapFunction:
    K = kernel_matrix(V, grid)
    if np.any(K < 0):
        raise ValueError("kernel has negative entries; Vhat is not non-positive")
    seed = np.asarray(seed, dtype=float)
    if not np.all(seed > 0):
        raise ValueError("seed must be positive")
    if config.method == "newton":
        d, res, it = _newton(K, grid.xi, seed, config.tol, config.max_iter)
    else:
        d, res, it = _picard(K, grid.xi, seed, config.tol, config.picard_max_iter, config.theta)
    return GapFunction(V, grid, d, res, it, config.method)


def _q_scale(V: RadialPotential) -> float:
    return 1.0 / V.core_length


def kernel_support(V: RadialPotential, mu: float, config: GridConfig = GridConfig()) -> tuple[float, float]:
    """(q_low, cutoff) outside of which |k(q, sqrt(mu))| is below the configured
    fractions of its Fermi-shell value; the gap is negligible there."""
    k = math.sqrt(mu)
    ref = abs(float(V.angular_kernel(k, k)))

    def small(q, rel):
        return abs(float(V.angular_kernel(q, k))) <= rel * ref

    def crossing(inside, outside, rel):
        # inside is above the threshold, outside below
        for _ in range(80):
            mid = 0.5 * (inside + outside)
            if small(mid, rel):
                outside = mid
            else:
                inside = mid
        return outside

    d = 1e-3 * k
    while not small(k + d, config.cutoff_rel) and d < 1e8 * k:
        d *= 2.0
    cutoff = crossing(k + 0.5 * d, k + d, config.cutoff_rel) if d > 1e-3 * k else k + d
    if small(0.0, config.floor_rel):
        q_low = crossing(k, 0.0, config.floor_rel)
    else:
        q_low = 0.0
    return q_low, cutoff


def solve_gap(
    V: RadialPotential,
    mu: float,
    config: SolverConfig = SolverConfig(),
    seed_scale: float = 1.0,
    delta_guess: float | None = None,
) -> GapFunction:
    """Positive solution of the gap equation at chemical potential mu."""
    if V.coupling == 0.0:
        raise UnderflowInfeasible("zero potential: only the trivial solution exists")
    pred = _feasibility(V, mu, config) if delta_guess is None else float(delta_guess)
    k = math.sqrt(mu)
    q_low, cutoff = kernel_support(V, mu, config.grid)
    gcfg = config.grid
    scale = pred / mu
    for _ in range(4):
        grid = build_grid(mu, gcfg.inner_factor * scale, cutoff, _q_scale(V), gcfg, q_low=q_low)
        profile = V.angular_kernel(grid.q, k) / V.angular_kernel(k, k)
        seed = seed_scale * pred * np.maximum(profile, 1e-300)
        gap = solve_on_grid(V, grid, seed, config)
        dF = gap.at_fermi
        if grid.s_min <= max(gcfg.inner_factor * dF / mu, gcfg.s_floor) * (1 + 1e-12):
            return gap
        scale, pred = dF / mu, dF
    return gap


def energy_gap(gap: GapFunction) -> float:
    """min_p E(p), refined by golden-section search on the interpolant
    inside the cells next to the best node."""
    grid = gap.grid
    k = math.sqrt(gap.mu)
    E = gap.energies
    i = int(np.argmin(E))
    best = float(E[i])
    s = grid.s

    def energy_at_s(sv):
        p = k * math.sqrt(1.0 + sv)
        d = float(gap.interpolate(p))
        return float(quasiparticle_energy(gap.mu * sv, d))

    lo = s[i - 1] if i > 0 else s[i]
    hi = s[i + 1] if i + 1 < s.size else s[i]
    a, b = float(lo), float(hi)
    if b > a:
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = energy_at_s(c), energy_at_s(d)
        for _ in range(80):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = energy_at_s(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = energy_at_s(d)
            if b - a <= 1e-14 * max(abs(a), abs(b), grid.s_min):
                break
        best = min(best, fc, fd)
    at_shell = energy_at_s(0.0)
    # a cell flat to 1e-14 reports the Fermi-momentum value
    if at_shell <= best * (1.0 + 1e-14):
        return at_shell
    return best


def m_integral(gap: GapFunction, kappa: float) -> float:
    """\\int_0^inf p^2 (1/E(p) - 1/(p^2 + kappa^2 mu)) dp.

    Outside the grid the gap is negligible, E = |p^2 - mu|, and those
    pieces are integrated in closed form.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    grid = gap.grid
    mu = gap.mu
    k = math.sqrt(mu)
    a2 = kappa * kappa * mu
    q2 = grid.q**2
    body = math.fsum(grid.weights * q2 * (1.0 / gap.energies - 1.0 / (q2 + a2)))
    L = grid.cutoff
    tail = 0.5 * k * math.log((L + k) / (L - k))
    a = kappa * k
    if kappa > 0:
        tail += a * math.atan2(a, L)
    ql = grid.q_low
    if ql > 0:
        # \int_0^ql p^2/(mu - p^2) - p^2/(p^2 + a^2) dp
        head = -ql + k * math.atanh(ql / k)
        head -= ql - (a * math.atan2(ql, a) if kappa > 0 else 0.0)
        tail += head
    return body + tail


def shifted_residual(V: RadialPotential, gap: GapFunction) -> float:
    """sup |Delta - T(Delta)| / sup Delta on a grid whose panel edges sit at
    the midpoints of the solve grid, with Delta transferred by interpolation."""
    g = gap.grid
    shifted = build_grid(g.mu, g.s_min, g.cutoff, g.q_scale, g.config, shifted=True, q_low=g.q_low)
    d = gap.interpolate(shifted.q)
    T = _rhs(kernel_matrix(V, shifted), shifted.xi, d)
    return float(np.max(np.abs(d - T)) / np.max(d))
