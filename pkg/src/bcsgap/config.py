"""Run configuration: a flat ``key = value`` file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .gap_solver import GridConfig, SolverConfig
from .potential import BUILTIN_KINDS, RadialPotential
from .tc_solver import TcConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    potential: str = "gaussian"
    g: float = 30.0
    length: float = 1.0
    table: str | None = None
    mu_list: tuple[float, ...] = (50.0, 100.0, 200.0, 400.0)
    kappa_list: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
    # grid
    nodes: int = 16
    panels_per_decade: int = 2
    inner_factor: float = 1e-2
    s_floor: float = 1e-14
    q_width: float = 1.0
    cutoff_rel: float = 1e-12
    # tolerances
    gap_tol: float = 1e-10
    min_gap_ratio: float = 1e-12
    tc_rel_width: float = 1e-8
    power_tol: float = 1e-12
    method: str = "newton"
    lmax: int = 60
    # output
    out: str = "results.csv"
    jsonl: str | None = None
    cache: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.potential not in BUILTIN_KINDS + ("tabulated",):
            raise ConfigError(f"unknown potential {self.potential!r}")
        if self.potential == "tabulated" and not self.table:
            raise ConfigError("tabulated potential needs 'table = <path>'")
        if not self.mu_list:
            raise ConfigError("mu_list must not be empty")
        if any(not (m > 0 and math.isfinite(m)) for m in self.mu_list):
            raise ConfigError("mu values must be positive")
        if any(b <= a for a, b in zip(self.mu_list, self.mu_list[1:])):
            raise ConfigError("mu_list must be strictly increasing")
        if not self.kappa_list or any(k < 0 for k in self.kappa_list):
            raise ConfigError("kappa_list must be non-empty with kappa >= 0")
        for name in ("inner_factor", "s_floor", "q_width", "cutoff_rel", "gap_tol", "min_gap_ratio", "tc_rel_width", "power_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.nodes < 2 or self.panels_per_decade < 1 or self.workers < 1:
            raise ConfigError("nodes >= 2, panels_per_decade >= 1 and workers >= 1 required")
        if not self.g >= 0 or not self.length > 0:
            raise ConfigError("g must be non-negative and length positive")
        if self.method not in ("newton", "picard"):
            raise ConfigError("method must be newton or picard")

    # -- parsing ----------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (x.strip() for x in line.split("=", 1))
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = val
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, val in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, known[key].type, val)
        return cls(**kwargs)

    def with_overrides(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    # -- derived objects ------------------------------------------------------

    def build_potential(self) -> RadialPotential:
        if self.potential == "tabulated":
            return RadialPotential.from_file(self.table, self.g)
        return RadialPotential(self.potential, self.g, self.length)

    def grid_config(self) -> GridConfig:
        return GridConfig(
            nodes=self.nodes,
            panels_per_decade=self.panels_per_decade,
            inner_factor=self.inner_factor,
            s_floor=self.s_floor,
            q_width=self.q_width,
            cutoff_rel=self.cutoff_rel,
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(method=self.method, tol=self.gap_tol, min_gap_ratio=self.min_gap_ratio, grid=self.grid_config())

    def tc_config(self) -> TcConfig:
        return TcConfig(rel_width=self.tc_rel_width, power_tol=self.power_tol, grid=self.grid_config())

    def effective_workers(self) -> int:
        env = os.environ.get("BCSGAP_WORKERS")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(f"BCSGAP_WORKERS must be an integer, got {env!r}") from None
            if n < 1:
                raise ConfigError("BCSGAP_WORKERS must be at least 1")
            return n
        return self.workers

    def point_key(self, mu: float) -> str:
        """Content hash of everything that determines the results at one mu."""
        pot = self.build_potential().spec()
        payload = {
            "schema": SCHEMA_VERSION,
            "potential": pot,
            "mu": float(mu),
            "kappas": list(self.kappa_list),
            "grid": asdict(self.grid_config()),
            "tol": [self.gap_tol, self.min_gap_ratio, self.tc_rel_width, self.power_tol, self.method],
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _coerce(key: str, typ, val: str):
    t = str(typ)
    try:
        if "tuple" in t:
            return _floats(val)
        if t in ("int", "<class 'int'>"):
            return int(val)
        if t in ("float", "<class 'float'>"):
            return float(val)
        if "None" in t:
            return val or None
        return val
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {val!r}") from None
