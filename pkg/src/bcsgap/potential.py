"""Radial interaction potentials, their Fourier transforms and admissibility checks.

Units are 2m = hbar = 1. The Fourier convention is
``Vhat(p) = (2 pi)^{-3/2} \\int V(x) exp(-i p.x) dx``, which for radial V
reduces to ``sqrt(2/pi) / p * \\int_0^inf r sin(p r) V(r) dr``.

The three built-in shapes all have closed-form transforms of the form
``Vhat(p) = -g (2 pi)^{-3/2} f(p)`` with f(0) = 1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate
from scipy.interpolate import CubicSpline

from .numerics import Interpolant1D, QuadratureError, _leggauss, adaptive_integrate

C3 = (2.0 * math.pi) ** -1.5
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
BUILTIN_KINDS = ("gaussian", "lorentzian", "yukawa")
MIN_TABLE_ROWS = 16


class TableParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class RadialPotential:
    """Radial real potential ``g * V_kind(r / length)``.

    For tabulated potentials ``table`` holds ``(r, V(r))`` samples; the
    coupling multiplies the tabulated values as well.
    """

    kind: str
    coupling: float = 1.0
    length: float = 1.0
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in BUILTIN_KINDS + ("tabulated",):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not math.isfinite(self.coupling) or self.coupling < 0:
            raise ValueError("coupling must be a finite non-negative number")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError("length must be positive")
        if self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated potential requires a table")
            r, v = (np.asarray(t, dtype=float) for t in self.table)
            _validate_table(r, v)
            self._tail  # fits the tail and checks integrability
        # L1 and L3/2 finiteness; cheap for built-ins, cached for tables
        if self.kind == "tabulated":
            norms = self.norms
            if not all(math.isfinite(x) for x in norms[:2]):
                raise ValueError("potential is not in L1 and L3/2")

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian(cls, coupling: float = 1.0, length: float = 1.0) -> "RadialPotential":
        return cls("gaussian", coupling, length)

    @classmethod
    def lorentzian(cls, coupling: float = 1.0, length: float = 1.0) -> "RadialPotential":
        return cls("lorentzian", coupling, length)

    @classmethod
    def yukawa(cls, coupling: float = 1.0, length: float = 1.0) -> "RadialPotential":
        return cls("yukawa", coupling, length)

    @classmethod
    def tabulated(cls, r, v, coupling: float = 1.0) -> "RadialPotential":
        r = tuple(float(x) for x in r)
        v = tuple(float(x) for x in v)
        return cls("tabulated", coupling, 1.0, (r, v))

    @classmethod
    def from_file(cls, path, coupling: float = 1.0) -> "RadialPotential":
        r, v = load_table(path)
        return cls.tabulated(r, v, coupling)

    def scaled(self, coupling: float) -> "RadialPotential":
        return RadialPotential(self.kind, coupling, self.length, self.table)

    def spec(self) -> dict:
        """JSON-friendly description used for cache keys."""
        d = {"kind": self.kind, "coupling": self.coupling, "length": self.length}
        if self.table is not None:
            d["table"] = [list(self.table[0]), list(self.table[1])]
        return d

    # -- position space ---------------------------------------------------

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("potential evaluated at negative radius")
        g, L = self.coupling, self.length
        if g == 0.0:
            return np.zeros_like(r)
        x = r / L
        if self.kind == "gaussian":
            return -g * C3 * np.exp(-0.5 * x * x)
        if self.kind == "lorentzian":
            return -g / (math.pi**2 * (1.0 + x * x) ** 2)
        if self.kind == "yukawa":
            with np.errstate(divide="ignore"):
                return np.where(x > 0, -g * np.exp(-x) / (4.0 * math.pi * np.where(x > 0, x, 1.0)), -np.inf)
        return g * self._table_eval(r)

    # -- momentum space ---------------------------------------------------

    def fourier(self, p):
        """Vhat(p) for p >= 0 (closed form for built-ins)."""
        p = np.asarray(p, dtype=float)
        if np.any(p < 0):
            raise ValueError("Fourier transform evaluated at negative momentum")
        g, L = self.coupling, self.length
        if g == 0.0:
            return np.zeros_like(p)
        if self.kind == "tabulated":
            return g * self._table_fourier(p)
        x = L * p
        return -g * C3 * L**3 * _shape(self.kind, x)

    def segment_integral(self, a, b):
        """\\int_a^b s Vhat(s) ds for 0 <= a <= b, evaluated stably."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self._segment(a, b, b - a, (b - a) * (b + a))

    def _segment(self, a, b, width, prod):
        """Segment integral with b - a and b^2 - a^2 supplied exactly."""
        g, L = self.coupling, self.length
        if g == 0.0:
            return np.zeros(np.broadcast(a, b).shape)
        if self.kind == "tabulated":
            G = self._antiderivative
            mid = 0.5 * (a + b)
            # G(b) - G(a) loses everything once the segment is below rounding
            narrow = width < 1e-7 * np.maximum(mid, 1e-300)
            wide = g * (G(b) - G(a))
            if not np.any(narrow):
                return wide
            return np.where(narrow, width * mid * self.fourier(mid), wide)
        return -g * C3 * L * _shape_segment(self.kind, L * a, L * width, L * L * prod)

    def angular_kernel(self, p, q):
        """Integral of Vhat(|p e_z - q w|) over the unit sphere in w.

        Equals ``(2 pi / (p q)) * segment_integral(|p - q|, p + q)``; at
        ``p q = 0`` the continuous limit ``4 pi Vhat(max(p, q))`` is used.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        pq = p * q
        lo = np.abs(p - q)
        hi = p + q
        safe = np.where(pq > 0, pq, 1.0)
        # b - a = 2 min(p, q) and b^2 - a^2 = 4 p q hold exactly
        seg = self._segment(lo, hi, 2.0 * np.minimum(p, q), 4.0 * pq)
        out = 2.0 * math.pi / safe * seg
        if np.any(pq == 0):
            out = np.where(pq > 0, out, 4.0 * math.pi * self.fourier(np.maximum(p, q)))
        return out

    # -- helpers used by the quadrature layers ----------------------------

    @property
    def radial_cutoff(self) -> tuple[float, int | None]:
        """``(R, n)``: beyond R the potential is negligible (n is None) or
        behaves as C r^{-n}."""
        L = self.length
        if self.kind == "gaussian":
            return 12.0 * L, None
        if self.kind == "yukawa":
            return 55.0 * L, None
        if self.kind == "lorentzian":
            return 0.0, 4
        tail = self._tail
        r_last = self._table_r[-1]
        return r_last, (tail[1] if tail[0] != 0.0 else None)

    @property
    def core_length(self) -> float:
        if self.kind == "tabulated":
            r = self._table_r
            return float(max(np.min(np.diff(r)) * 4, 1e-3 * r[-1]))
        return self.length

    # -- tabulated internals ----------------------------------------------

    @cached_property
    def _table_r(self) -> np.ndarray:
        return np.asarray(self.table[0], dtype=float)

    @cached_property
    def _table_v(self) -> np.ndarray:
        return np.asarray(self.table[1], dtype=float)

    @cached_property
    def _interp(self) -> Interpolant1D:
        return Interpolant1D(self._table_r, self._table_v)

    @cached_property
    def _tail(self) -> tuple[float, float]:
        """Power-law tail ``C r^{-n}`` fitted to the last decade of samples."""
        r, v = self._table_r, self._table_v
        sel = r >= r[-1] / 10.0
        if np.count_nonzero(sel) < 3:
            sel = np.zeros_like(r, dtype=bool)
            sel[-3:] = True
        rt, vt = r[sel], v[sel]
        if np.all(vt == 0.0) or not (np.all(vt > 0) or np.all(vt < 0)) or rt[0] <= 0:
            return 0.0, 0.0
        slope, icpt = np.polyfit(np.log(rt), np.log(np.abs(vt)), 1)
        n = -slope
        if n <= 3.0:
            raise ValueError(f"tabulated tail decays like r^-{n:.3g}; need faster than r^-3 for L1")
        # anchor the amplitude to the last sample so the tail is continuous
        C = vt[-1] * rt[-1] ** n
        return float(C), float(n)

    def _table_eval(self, r: np.ndarray) -> np.ndarray:
        rt = self._table_r
        C, n = self._tail
        inside = self._interp(np.clip(r, rt[0], rt[-1]))
        with np.errstate(divide="ignore", over="ignore"):
            tail = C * np.where(r > 0, r, 1.0) ** (-n) if C != 0.0 else np.zeros_like(r)
        return np.where(r > rt[-1], tail, inside)

    def _table_fourier(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.empty(p.shape)
        flat = p.ravel()
        res = np.array([_tabulated_transform(self, float(pi)) for pi in flat])
        out.ravel()[:] = res
        return out

    @cached_property
    def _antiderivative(self):
        """Spline antiderivative of s Vhat(s) for the tabulated shape (coupling 1)."""
        h = float(np.min(np.diff(self._table_r)))
        s_top = min(max(200.0 / h, 50.0), 1e4)
        s = np.unique(np.concatenate([np.linspace(0.0, 2.0, 81), np.geomspace(2.0, s_top, 700)]))
        vals = np.array([si * _tabulated_transform(self, float(si)) for si in s])
        spline = CubicSpline(s, vals).antiderivative()
        top = float(spline(s[-1]))

        def G(x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= s[-1], top, spline(np.minimum(x, s[-1])))

        return G

    # -- norms ------------------------------------------------------------

    @cached_property
    def norms(self) -> tuple[float, float, float]:
        """(||V||_1, ||V||_{3/2}, || |x| V ||_2) over R^3."""
        if self.coupling == 0.0:
            return 0.0, 0.0, 0.0
        breaks = self._breakpoints()
        f1 = lambda r: 4 * math.pi * r * r * np.abs(self(r))
        f32 = lambda r: 4 * math.pi * r * r * np.abs(self(r)) ** 1.5
        f2 = lambda r: 4 * math.pi * r**4 * np.asarray(self(r)) ** 2
        vals = []
        for f in (f1, f32, f2):
            try:
                vals.append(_radial_integral(f, breaks))
            except QuadratureError:
                vals.append(math.inf)
        return vals[0], vals[1] ** (2.0 / 3.0), math.sqrt(vals[2])

    def _breakpoints(self) -> list[float]:
        if self.kind == "tabulated":
            r = self._table_r
            return [float(x) for x in r if x > 0]
        return [self.length]


def _shape(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "gaussian":
        return np.exp(-0.5 * x * x)
    if kind == "lorentzian":
        return np.exp(-x)
    return 1.0 / (1.0 + x * x)


def _shape_segment(kind: str, a: np.ndarray, d: np.ndarray, prod: np.ndarray) -> np.ndarray:
    """\\int_a^b t f(t) dt for the normalised shapes, from a, d = b - a and
    prod = b^2 - a^2, written to avoid cancellation."""
    if kind == "gaussian":
        # e^{-a^2/2} - e^{-b^2/2}
        return -np.exp(-0.5 * a * a) * np.expm1(-0.5 * prod)
    if kind == "lorentzian":
        # (1+a) e^{-a} - (1+b) e^{-b}
        return np.exp(-a) * (-(1.0 + a) * np.expm1(-d) - d * np.exp(-d))
    # yukawa: log((1+b^2)/(1+a^2)) / 2
    return 0.5 * np.log1p(prod / (1.0 + a * a))


def _validate_table(r: np.ndarray, v: np.ndarray) -> None:
    if r.ndim != 1 or r.shape != v.shape:
        raise ValueError("table columns must be 1-d and of equal length")
    if r.size < MIN_TABLE_ROWS:
        raise ValueError(f"table needs at least {MIN_TABLE_ROWS} rows, got {r.size}")
    if np.any(~np.isfinite(r)) or np.any(~np.isfinite(v)):
        raise ValueError("table contains non-finite values")
    if r[0] < 0 or np.any(np.diff(r) <= 0):
        raise ValueError("table radii must be non-negative and strictly increasing")


def load_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse the two-column ``r value`` format; '#' starts a comment."""
    rows: list[tuple[float, float]] = []
    text = Path(path).read_text()
    last_r = -math.inf
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TableParseError(f"expected two columns, got {len(parts)}", lineno)
        try:
            r, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise TableParseError(f"cannot parse numbers from {line!r}", lineno) from None
        if not (math.isfinite(r) and math.isfinite(v)):
            raise TableParseError("non-finite value", lineno)
        if r < 0:
            raise TableParseError("negative radius", lineno)
        if r <= last_r:
            raise TableParseError("radii must be strictly increasing", lineno)
        last_r = r
        rows.append((r, v))
    if len(rows) < MIN_TABLE_ROWS:
        raise TableParseError(f"need at least {MIN_TABLE_ROWS} rows, found {len(rows)}")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1]


def _radial_integral(f, breaks: list[float], tol: float = 1e-11) -> float:
    """\\int_0^inf f(r) dr split at the given breakpoints, singular hint at 0."""
    pts = sorted({0.0, *[b for b in breaks if b > 0]})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += adaptive_integrate(f, lo, hi, tol=tol, singular_points=[0.0] if lo == 0.0 else ())
    total += adaptive_integrate(f, pts[-1], math.inf, tol=tol, singular_points=[0.0] if pts[-1] == 0.0 else ())
    return total


# -- tabulated sine transform ----------------------------------------------

def _poly_times_sin(q: np.ndarray, r_left: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    """\\int_0^h Q(t) sin(p (r_left + t)) dt for quartics Q (coeffs q[0..4], lowest first)."""
    out = np.empty(r_left.shape)
    analytic = p * h > 2.0
    if np.any(analytic):
        qa = [c[analytic] for c in q]
        rl, ha = r_left[analytic], h[analytic]

        def F(t):
            Q, Q1, Q2, Q3, Q4 = _derivs(qa, t)
            th = p * (rl + t)
            c, s = np.cos(th), np.sin(th)
            return -Q * c / p + Q1 * s / p**2 + Q2 * c / p**3 - Q3 * s / p**4 - Q4 * c / p**5

        out[analytic] = F(ha) - F(np.zeros_like(ha))
    rest = ~analytic
    if np.any(rest):
        x, w = _leggauss(12)
        hr = h[rest][:, None]
        t = 0.5 * hr * (x + 1.0)
        qr = [c[rest][:, None] for c in q]
        Q = _derivs(qr, t)[0]
        out[rest] = (0.5 * hr * w * Q * np.sin(p * (r_left[rest][:, None] + t))).sum(axis=1)
    return out


def _derivs(q, t):
    q0, q1, q2, q3, q4 = q
    Q = q0 + t * (q1 + t * (q2 + t * (q3 + t * q4)))
    Q1 = q1 + t * (2 * q2 + t * (3 * q3 + t * 4 * q4))
    Q2 = 2 * q2 + t * (6 * q3 + t * 12 * q4)
    Q3 = 6 * q3 + t * 24 * q4
    Q4 = 24 * q4
    return Q, Q1, Q2, Q3, Q4


def _tabulated_transform(V: RadialPotential, p: float) -> float:
    """Vhat at coupling 1 for a tabulated potential: exact transform of the
    piecewise-cubic interpolant plus constant head and power-law tail."""
    r, v = V._table_r, V._table_v
    C, n = V._tail
    c = V._interp.coefficients  # (4, m), highest power first, local variable
    c3, c2, c1, c0 = c  # P(t) = c3 t^3 + c2 t^2 + c1 t + c0
    rl = r[:-1]
    h = np.diff(r)
    v0, r0, R = v[0], r[0], r[-1]
    if p == 0.0:
        # \int r^2 V dr
        x, w = _leggauss(6)
        t = 0.5 * h[:, None] * (x + 1.0)
        P = c0[:, None] + t * (c1[:, None] + t * (c2[:, None] + t * c3[:, None]))
        body = math.fsum((0.5 * h[:, None] * w * (rl[:, None] + t) ** 2 * P).ravel())
        head = v0 * r0**3 / 3.0
        tail = C * R ** (3.0 - n) / (n - 3.0) if C != 0.0 else 0.0
        return SQRT_2_OVER_PI * (head + body + tail)
    # r * P(t) with r = rl + t, coefficients lowest power first
    q = [rl * c0, c0 + rl * c1, c1 + rl * c2, c2 + rl * c3, c3]
    body = math.fsum(_poly_times_sin(q, rl, h, p))
    # \int_0^{r0} r sin(pr) v0 dr
    head = v0 * (math.sin(p * r0) - p * r0 * math.cos(p * r0)) / p**2 if r0 > 0 else 0.0
    tail = 0.0
    if C != 0.0:
        tail, _ = sp_integrate.quad(lambda x: C * x ** (1.0 - n), R, math.inf, weight="sin", wvar=p)
    return SQRT_2_OVER_PI * (head + body + tail) / p


# -- module-level operations ----------------------------------------------

def evaluate(V: RadialPotential, r):
    """V(r), including the coupling factor. Yukawa returns -inf at r = 0."""
    out = V(r)
    return float(out) if np.ndim(out) == 0 else out


def fourier(V: RadialPotential, p):
    out = V.fourier(p)
    return float(out) if np.ndim(out) == 0 else out


class Verdict(str, enum.Enum):
    ADMISSIBLE_CHECKED = "admissible-checked"
    ADMISSIBLE_UNVERIFIABLE = "admissible-unverifiable-parts"
    REJECTED = "rejected"


@dataclass(frozen=True)
class AdmissibilityReport:
    fourier_nonpositive: bool
    worst_fourier: float
    fourier_at_zero: float
    l1_norm: float
    l32_norm: float
    weighted_l2_norm: float
    s_star_estimate: float
    verdict: Verdict
    unverified: tuple[str, ...] = ()
    reasons: tuple[str, ...] = ()

    def render(self) -> str:
        lines = [
            f"verdict:             {self.verdict.value}",
            f"Vhat(0):             {self.fourier_at_zero:.10g}",
            f"Vhat <= 0 sampled:   {self.fourier_nonpositive} (max sampled {self.worst_fourier:.3e})",
            f"||V||_1:             {self.l1_norm:.10g}",
            f"||V||_3/2:           {self.l32_norm:.10g}",
            f"|| |x| V ||_2:       {self.weighted_l2_norm:.10g}",
            f"s* estimate:         {self.s_star_estimate:.6g}",
        ]
        if self.unverified:
            lines.append(f"unverified:          {', '.join(self.unverified)}")
        for r in self.reasons:
            lines.append(f"reason:              {r}")
        return "\n".join(lines)


def _decade_mass(f, s: float, k: int) -> float:
    """\\int over r in [10^{-k-1}, 10^{-k}] of r^{2-s} f(r) dr, in log r."""
    x, w = _leggauss(24)
    lo, hi = -(k + 1) * math.log(10.0), -k * math.log(10.0)
    t = lo + 0.5 * (hi - lo) * (x + 1.0)
    r = np.exp(t)
    return 0.5 * (hi - lo) * float(np.sum(w * r ** (3.0 - s) * f(r)))


def estimate_critical_exponent(f, s_max: float = 10.0, depth: int = 12, tol: float = 1e-7) -> float:
    """sup{s : r^{-s} f(r) is integrable near 0 in R^3}, by bisection.

    ``f`` is a non-negative radial profile. Finiteness at a trial ``s`` is
    judged from the ratio of the masses of the two deepest probed decades
    near the origin: a ratio below one means the decade masses shrink
    geometrically.
    """
    def finite(s):
        a = _decade_mass(f, s, depth)
        b = _decade_mass(f, s, depth - 1)
        if b == 0.0:
            return a == 0.0
        return a / b < 1.0

    if finite(s_max):
        return math.inf
    if not finite(0.0):
        return 0.0
    lo, hi = 0.0, s_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if finite(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def admissibility(V: RadialPotential, tol: float = 1e-9, assume_unverifiable: bool = False) -> AdmissibilityReport:
    """Computable parts of the admissibility conditions.

    ``tol`` is relative to |Vhat(0)|: a sampled Vhat above ``tol * |Vhat(0)|``
    counts as a sign violation. Interpolated tables ring at about 1e-10.

    Conditions on the symmetric-decreasing rearrangement and on the
    sign structure at the critical exponent are reported as unverified.
    Pass ``assume_unverifiable=True`` to take them on trust.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ps = np.geomspace(1e-3, 1e3, 401)
    vh = np.asarray(V.fourier(ps), dtype=float)
    v0 = float(V.fourier(0.0))
    worst = float(np.max(vh))
    scale = abs(v0) if v0 != 0.0 else 1.0
    nonpos = worst <= tol * scale
    l1, l32, wl2 = V.norms

    def part(sign):
        return lambda r: np.maximum(sign * np.nan_to_num(np.asarray(V(r), dtype=float), neginf=-1e300, posinf=1e300), 0.0)

    s_plus = estimate_critical_exponent(part(+1.0))
    s_minus = estimate_critical_exponent(part(-1.0))
    s_star = min(s_plus, s_minus)

    reasons = []
    if not v0 < 0:
        reasons.append(f"Vhat(0) = {v0:.3e} is not negative")
    if not nonpos:
        reasons.append(f"sampled Vhat reaches {worst:.3e} > {tol * scale:.3e}")
    if not (math.isfinite(l1) and math.isfinite(l32)):
        reasons.append("V is not in L1 and L3/2")
    if not math.isfinite(wl2):
        reasons.append("|x| V is not in L2")
    if not s_star > 1.4:
        reasons.append(f"s* estimate {s_star:.4g} does not exceed 7/5")
    unverified = ("rearrangement condition (a)", "attractive-dominance condition (b)")
    if reasons:
        verdict = Verdict.REJECTED
    elif assume_unverifiable:
        verdict = Verdict.ADMISSIBLE_CHECKED
    else:
        verdict = Verdict.ADMISSIBLE_UNVERIFIABLE
    return AdmissibilityReport(
        fourier_nonpositive=nonpos,
        worst_fourier=worst,
        fourier_at_zero=v0,
        l1_norm=l1,
        l32_norm=l32,
        weighted_l2_norm=wl2,
        s_star_estimate=s_star,
        verdict=verdict,
        unverified=() if assume_unverifiable else unverified,
        reasons=tuple(reasons),
    )
