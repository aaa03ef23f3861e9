"""High-density predictions for the gap and critical temperature, and
diagnostics comparing computed values against them."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

EULER_GAMMA = 0.57721566490153286
THM1_TARGET = 2.0 - math.log(8.0)
UNIVERSAL_RATIO = math.pi * math.exp(-EULER_GAMMA)
XI_PREFACTOR = 8.0 * math.exp(-2.0)
TC_PREFACTOR = (8.0 / math.pi) * math.exp(EULER_GAMMA - 2.0)
UNDERFLOW_EXPONENT = -700.0


class Prediction(float):
    """A float that remembers whether its exponential underflowed."""

    underflow: bool

    def __new__(cls, value: float, underflow: bool = False):
        obj = super().__new__(cls, value)
        obj.underflow = underflow
        return obj

    def __repr__(self):
        return f"Prediction({float(self)!r}, underflow={self.underflow})"


def exponent(mu: float, b: float) -> float:
    """pi / (2 sqrt(mu) b); tends to -inf as b -> 0-."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not b < 0:
        raise ValueError("b must be negative")
    return math.pi / (2.0 * math.sqrt(mu) * b)


def _predict(prefactor: float, mu: float, b: float, shift: float) -> Prediction:
    if not b < 0:
        if b == 0.0:
            return Prediction(0.0, True)
        raise ValueError("b must be negative")
    x = exponent(mu, b) + shift
    if x < UNDERFLOW_EXPONENT:
        return Prediction(0.0, True)
    return Prediction(mu * prefactor * math.exp(x), False)


def predict_xi(mu: float, b: float, kappa: float = 0.0) -> Prediction:
    """mu 8 e^{-2} exp(pi / (2 sqrt(mu) b)).

    With ``kappa > 0`` the argument is understood as the kappa-dependent
    second-order eigenvalue and the exponent gains ``kappa pi / 2``.
    """
    return _predict(XI_PREFACTOR, mu, b, 0.5 * math.pi * kappa)


def predict_tc(mu: float, b: float, kappa: float = 0.0) -> Prediction:
    """mu (8/pi) e^{gamma - 2} exp(pi / (2 sqrt(mu) b))."""
    return _predict(TC_PREFACTOR, mu, b, 0.5 * math.pi * kappa)


def thm1_functional(xi: float, mu: float, b: float, kappa: float = 0.0) -> float:
    """log(mu / xi) + pi / (2 sqrt(mu) b) (+ kappa pi / 2 for kappa-dependent b)."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    return math.log(mu / xi) + exponent(mu, b) + 0.5 * math.pi * kappa


def m_prediction(mu: float, delta_fermi: float, kappa: float) -> float:
    """sqrt(mu) (log(mu / Delta) - 2 + kappa pi / 2 + log 8)."""
    if not delta_fermi > 0:
        raise ValueError("delta_fermi must be positive")
    return math.sqrt(mu) * (math.log(mu / delta_fermi) - 2.0 + 0.5 * math.pi * kappa + math.log(8.0))


@dataclass(frozen=True)
class ShiftTable:
    kappas: tuple[float, ...]
    values: tuple[float, ...]
    spread: float

    def value_at(self, kappa: float) -> float:
        return self.values[self.kappas.index(kappa)]


def lemma2_shift(mu: float, pairs: Iterable[tuple[float, float]]) -> ShiftTable:
    """pi / (2 sqrt(mu) b^(kappa)) + kappa pi / 2 for each (kappa, b^(kappa)),
    and the largest pairwise difference between them."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least two kappa values")
    kappas = tuple(float(k) for k, _ in pairs)
    values = tuple(exponent(mu, b) + 0.5 * math.pi * k for k, b in pairs)
    spread = max(abs(a - c) for a, c in itertools.combinations(values, 2))
    return ShiftTable(kappas, values, spread)


@dataclass
class SweepRecord:
    mu: float
    g: float
    kappa: float
    e_mu: float = math.nan
    b_mu_kappa: float = math.nan
    b_mu_zero_effective: float = math.nan
    xi: float = math.nan
    delta_fermi: float = math.nan
    t_c: float = math.nan
    m_mu: float = math.nan
    thm1_functional: float = math.nan
    tc_prediction: float = math.nan
    xi_prediction: float = math.nan
    ratio: float = math.nan
    status: str = "pending"
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        return cls(**d)


@dataclass(frozen=True)
class Universality:
    ratio: float
    deviation: float
    gap_vs_fermi: float
    xi_below_fermi: bool


def universality(record: SweepRecord) -> Universality:
    if not (record.xi > 0 and record.t_c > 0):
        raise ValueError("record needs positive xi and t_c")
    ratio = record.xi / record.t_c
    rel = abs(record.xi - record.delta_fermi) / record.delta_fermi
    return Universality(ratio, abs(ratio - UNIVERSAL_RATIO), rel, record.xi <= record.delta_fermi)


def non_increasing(values: Sequence[float], last: int | None = None, slack: float = 0.0) -> bool:
    """True when each value is at most the previous one (plus ``slack``);
    ``last`` restricts the check to the final ``last`` steps."""
    vals = list(values)
    if last is not None:
        vals = vals[-(last + 1):]
    return all(b <= a + slack for a, b in zip(vals, vals[1:]))
