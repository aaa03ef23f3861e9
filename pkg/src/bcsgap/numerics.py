"""Special functions and quadrature primitives.

Everything here is a pure function of its inputs. Quadrature sums use
``math.fsum`` so results do not depend on summation order details.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

MAX_ELL = 200


class QuadratureError(RuntimeError):
    """Raised when an integrand is non-finite or adaptive refinement stalls."""

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


# --------------------------------------------------------------------------
# Spherical Bessel functions
# --------------------------------------------------------------------------

def _j0_j1(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms for j_0, j_1 with Taylor series near the origin."""
    x = np.asarray(x, dtype=float)
    small = x < 0.5
    xs = np.where(small, x, 0.0)
    xl = np.where(small, 1.0, x)
    x2 = xs * xs
    # Taylor series to x^12; truncation error below 1e-17 for x < 0.5
    j0_s = 1 - x2 / 6 * (1 - x2 / 20 * (1 - x2 / 42 * (1 - x2 / 72 * (1 - x2 / 110 * (1 - x2 / 156)))))
    j1_s = xs / 3 * (1 - x2 / 10 * (1 - x2 / 28 * (1 - x2 / 54 * (1 - x2 / 88 * (1 - x2 / 130)))))
    s, c = np.sin(xl), np.cos(xl)
    j0_l = s / xl
    j1_l = s / (xl * xl) - c / xl
    return np.where(small, j0_s, j0_l), np.where(small, j1_s, j1_l)


def _upward(lmax: int, x: np.ndarray) -> np.ndarray:
    """Upward recurrence. Only stable where x >= ell."""
    x = np.asarray(x, dtype=float)
    out = np.empty((lmax + 1,) + x.shape)
    j0, j1 = _j0_j1(x)
    out[0] = j0
    if lmax >= 1:
        out[1] = j1
    for ell in range(1, lmax):
        out[ell + 1] = (2 * ell + 1) / x * out[ell] - out[ell - 1]
    return out


def _miller_start(lmax: int, xmax: float) -> int:
    top = max(lmax, int(math.ceil(xmax)))
    return top + 32 + 2 * int(math.sqrt(40.0 * (top + 1)))


def _miller(lmax: int, x: np.ndarray) -> np.ndarray:
    """Downward (Miller) recurrence, normalised against exact j_0 and j_1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((lmax + 1,) + x.shape)
    if x.size == 0:
        return out
    n_start = _miller_start(lmax, float(np.max(x)))
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-300)
    for ell in range(n_start, 0, -1):
        f_prev = (2 * ell + 1) / x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if ell - 1 <= lmax:
            out[ell - 1] = f_cur
        big = np.abs(f_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            f_cur = f_cur * scale
            f_next = f_next * scale
            out *= scale
    # f_1 is needed for the normalisation even when lmax == 0
    f0 = f_cur
    f1 = f_next
    j0, j1 = _j0_j1(x)
    m = np.maximum(np.abs(f0), np.abs(f1))
    f0, f1 = f0 / m, f1 / m
    c = (j0 * f0 + j1 * f1) / (f0 * f0 + f1 * f1) / m
    return out * c


def _small_x(lmax: int, x: np.ndarray) -> np.ndarray:
    """Two-term series x^l/(2l+1)!! (1 - x^2/(2(2l+3))); exact in double for x < 1e-8."""
    out = np.empty((lmax + 1,) + x.shape)
    lead = np.ones_like(x)
    for ell in range(lmax + 1):
        if ell:
            lead = lead * x / (2 * ell + 1)
        out[ell] = lead * (1.0 - x * x / (2.0 * (2 * ell + 3)))
    return out


def spherical_bessel_table(lmax: int, x) -> np.ndarray:
    """Table ``out[ell, ...] = j_ell(x)`` for ``ell = 0..lmax``.

    Closed forms for ell <= 1, upward recurrence where every requested
    order satisfies ell < x, Miller downward recurrence otherwise, and a
    power series below x = 1e-8 where the recurrences overflow.
    """
    if lmax < 0 or lmax > MAX_ELL:
        raise ValueError(f"ell must lie in [0, {MAX_ELL}], got {lmax}")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)):
        raise ValueError("spherical_bessel requires finite arguments")
    if np.any(x < 0):
        raise ValueError("spherical_bessel requires x >= 0")
    flat = x.ravel()
    out = np.zeros((lmax + 1, flat.size))
    zero = flat == 0.0
    tiny = (~zero) & (flat < 1e-8)
    up = (~zero) & (flat > lmax)
    down = (~zero) & ~up & ~tiny
    out[0, zero] = 1.0
    if np.any(tiny):
        out[:, tiny] = _small_x(lmax, flat[tiny])
    if np.any(up):
        out[:, up] = _upward(lmax, flat[up])
    if np.any(down):
        out[:, down] = _miller(lmax, flat[down])
    return out.reshape((lmax + 1,) + x.shape)


def spherical_bessel(ell: int, x: float) -> float:
    """j_ell(x) for a single order and non-negative argument."""
    if int(ell) != ell or ell < 0:
        raise ValueError(f"ell must be a non-negative integer, got {ell}")
    return float(spherical_bessel_table(int(ell), np.asarray([x], dtype=float))[int(ell), 0])


# --------------------------------------------------------------------------
# Quadrature rules
# --------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple[float, float]
    mapped: bool = field(default=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        a, b = self.domain
        if nodes.size and (nodes[0] <= a or nodes[-1] >= b):
            raise ValueError("quadrature nodes must lie inside the domain")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size


def gauss_legendre(n: int, a: float, b: float) -> QuadratureRule:
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(a + half * (x + 1.0), half * w, (a, b))


def composite_gauss_legendre(edges: Sequence[float], n: int) -> QuadratureRule:
    """Gauss-Legendre with ``n`` nodes on every panel between consecutive edges."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = _leggauss(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return QuadratureRule(nodes, weights, (float(edges[0]), float(edges[-1])))


def semi_infinite(a: float = 0.0, panels: int = 8, n: int = 64) -> QuadratureRule:
    """Rule for [a, inf) via r = a + t/(1-t), Gauss-Legendre panels in t."""
    base = composite_gauss_legendre(np.linspace(0.0, 1.0, panels + 1), n)
    t = base.nodes
    nodes = a + t / (1.0 - t)
    weights = base.weights / (1.0 - t) ** 2
    return QuadratureRule(nodes, weights, (a, math.inf), mapped=True)


def integrate(f: Callable, rule: QuadratureRule) -> float:
    """Weighted sum of ``f`` over the rule's nodes."""
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise QuadratureError(
            f"non-finite integrand value {values[idx]!r} at node x={rule.nodes[idx]!r}"
        )
    return math.fsum(values * rule.weights)


# --------------------------------------------------------------------------
# Adaptive integration
# --------------------------------------------------------------------------

def _gl_pair(g: Callable, a: float, b: float, n: int) -> tuple[float, float]:
    x1, w1 = _leggauss(n)
    x2, w2 = _leggauss(2 * n)
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    v1 = np.asarray(g(mid + half * x1), dtype=float)
    v2 = np.asarray(g(mid + half * x2), dtype=float)
    if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
        raise QuadratureError(f"non-finite integrand on [{a!r}, {b!r}]", (a, b))
    coarse = half * math.fsum(w1 * v1)
    fine = half * math.fsum(w2 * v2)
    return fine, abs(fine - coarse)


_EPS = float(np.finfo(float).eps)


def _adapt(g: Callable, a: float, b: float, tol: float, max_depth: int, n: int) -> tuple[float, float]:
    total_len = b - a
    stack = [(a, b, 0)]
    pieces: list[float] = []
    err_total = 0.0
    worst: tuple[float, tuple[float, float]] = (0.0, (a, b))
    while stack:
        lo, hi, depth = stack.pop()
        value, err = _gl_pair(g, lo, hi, n)
        local_tol = max(tol * (hi - lo) / total_len, 1e-300)
        # roundoff floor: bisecting further cannot lower the estimate
        if err <= local_tol or err <= 64.0 * _EPS * abs(value) or (hi - lo) <= 1e-15 * max(1.0, abs(lo)):
            pieces.append(value)
            err_total += err
            continue
        if depth >= max_depth:
            if err > worst[0]:
                worst = (err, (lo, hi))
            pieces.append(value)
            err_total += err
            continue
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    if worst[0] > 0.0 and err_total > tol:
        raise QuadratureError(
            f"adaptive integration did not converge; worst subinterval "
            f"[{worst[1][0]!r}, {worst[1][1]!r}] with error estimate {worst[0]:.3e}",
            worst[1],
        )
    return math.fsum(pieces), err_total


def adaptive_integrate(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    singular_points: Sequence[float] = (),
    max_depth: int = 40,
    n: int = 10,
    return_error: bool = False,
):
    """Recursive-bisection Gauss-Legendre integration of ``f`` over [a, b].

    ``b`` may be ``inf``; that piece is mapped via x = c + t/(1-t).
    Subintervals adjacent to a hinted singular point c use the graded map
    x = c +/- L u^2, which removes |x - c|^{-1/2} behaviour and clusters
    nodes at c.
    """
    if not a < b:
        raise ValueError("adaptive_integrate requires a < b")
    if tol <= 0:
        raise ValueError("tol must be positive")
    finite_b = math.isfinite(b)
    hints = sorted({float(c) for c in singular_points if a <= c <= (b if finite_b else math.inf)})
    cuts = sorted({a, *hints} | ({b} if finite_b else set()))
    segments = list(zip(cuts[:-1], cuts[1:]))
    tail_start = cuts[-1] if not finite_b else None

    def vec(fn):
        return lambda x: np.asarray([fn(xi) for xi in np.atleast_1d(x)], dtype=float)

    try:
        probe = a + 0.318309886 * ((b - a) if finite_b else 1.0)
        np.asarray(f(np.array([probe])), dtype=float).reshape(1)
        fv = f
    except Exception:
        fv = vec(f)

    n_pieces = len(segments) + (1 if tail_start is not None else 0)
    piece_tol = tol / max(n_pieces, 1)
    total, err = 0.0, 0.0
    results = []
    for lo, hi in segments:
        L = hi - lo
        left_sing = lo in hints
        right_sing = hi in hints
        if left_sing and right_sing:
            mid = 0.5 * (lo + hi)
            parts = [(lo, mid, "left"), (mid, hi, "right")]
        elif left_sing:
            parts = [(lo, hi, "left")]
        elif right_sing:
            parts = [(lo, hi, "right")]
        else:
            parts = [(lo, hi, None)]
        for plo, phi, side in parts:
            span = phi - plo
            if side == "left":
                g = lambda u, plo=plo, span=span: fv(plo + span * u * u) * (2.0 * span * u)
            elif side == "right":
                g = lambda u, phi=phi, span=span: fv(phi - span * u * u) * (2.0 * span * u)
            else:
                g = lambda u, plo=plo, span=span: fv(plo + span * u) * span
            v, e = _adapt(g, 0.0, 1.0, piece_tol / len(parts), max_depth, n)
            results.append(v)
            err += e
    if tail_start is not None:
        c = tail_start
        if c in hints:
            # graded near the hint, then mapped to infinity
            g0 = lambda u, c=c: fv(c + u * u) * (2.0 * u)
            v, e = _adapt(g0, 0.0, 1.0, piece_tol / 2, max_depth, n)
            results.append(v)
            err += e
            c = c + 1.0
        g = lambda t, c=c: fv(c + t / (1.0 - t)) / (1.0 - t) ** 2
        v, e = _adapt(g, 0.0, 1.0 - 1e-15, piece_tol, max_depth, n)
        results.append(v)
        err += e
    total = math.fsum(results)
    return (total, err) if return_error else total


# --------------------------------------------------------------------------
# Interpolation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Interpolant1D:
    """Monotone piecewise-cubic (PCHIP) interpolant."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise ValueError("need matching 1-d knots and values with at least two points")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_pchip", PchipInterpolator(knots, values, extrapolate=True))

    def __call__(self, x):
        out = self._pchip(np.asarray(x, dtype=float))
        # exact reproduction at the knots
        x_arr = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x_arr)
        idx = np.clip(idx, 0, self.knots.size - 1)
        hit = self.knots[idx] == x_arr
        return np.where(hit, self.values[idx], out)

    @property
    def coefficients(self) -> np.ndarray:
        """Local cubic coefficients, shape (4, n_knots - 1), highest power first."""
        return self._pchip.c
