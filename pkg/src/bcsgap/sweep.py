"""Sweep orchestration: worker pool, JSON-lines result cache, CSV output."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import asymptotics as asy
from .config import SCHEMA_VERSION, RunConfig
from .pipeline import PointResult, compute_point

log = logging.getLogger("bcsgap")

CSV_COLUMNS = (
    "schema_version", "mu", "g", "kappa", "e_mu", "b_mu", "xi", "delta_fermi",
    "t_c", "m_mu", "thm1_functional", "ratio", "status",
)


def fmt(x) -> str:
    """17 significant digits, enough for an exact round trip."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _point_job(args):
    cfg, mu = args
    return compute_point(cfg.build_potential(), mu, cfg.kappa_list, cfg.solver_config(), cfg.tc_config())


def _to_json(p: PointResult) -> dict:
    return {
        "mu": p.mu,
        "status": p.status,
        "grid_size": p.grid_size,
        "iterations": p.iterations,
        "residual": p.residual,
        "b_by_kappa": [[k, v] for k, v in sorted(p.b_by_kappa.items())],
        "records": [r.as_dict() for r in p.records],
    }


def _from_json(d: dict) -> PointResult:
    recs = [asy.SweepRecord.from_dict(r) for r in d["records"]]
    return PointResult(
        mu=d["mu"], records=recs, status=d["status"], grid_size=d["grid_size"],
        iterations=d["iterations"], residual=d["residual"],
        b_by_kappa={float(k): v for k, v in d["b_by_kappa"]},
    )


def load_cache(path: Path | None) -> dict[str, dict]:
    if path is None or not path.exists():
        return {}
    out = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError:
            log.warning("skipping unreadable cache line in %s", path)
            continue
        out[entry["key"]] = entry["point"]
    return out


def run_sweep(cfg: RunConfig, force: bool = False) -> list[PointResult]:
    """Compute (or reuse) every mu in the config; results come back in mu order."""
    cache_path = Path(cfg.cache) if cfg.cache else None
    cached = {} if force else load_cache(cache_path)
    keys = {mu: cfg.point_key(mu) for mu in cfg.mu_list}
    todo = [mu for mu in cfg.mu_list if keys[mu] not in cached or cached[keys[mu]]["status"] != "ok"]
    fresh: dict[float, PointResult] = {}
    workers = min(cfg.effective_workers(), max(len(todo), 1))
    if todo:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for mu, res in zip(todo, pool.map(_point_job, [(cfg, mu) for mu in todo])):
                    fresh[mu] = res
        else:
            for mu in todo:
                fresh[mu] = _point_job((cfg, mu))
    results = []
    for mu in cfg.mu_list:
        if mu in fresh:
            # round-trip through JSON so fresh and cached runs serialise identically
            results.append(_from_json(json.loads(json.dumps(_to_json(fresh[mu])))))
        else:
            log.info("mu=%g taken from cache", mu)
            results.append(_from_json(cached[keys[mu]]))
    if cache_path is not None and fresh:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        with cache_path.open("a") as fh:
            for mu in cfg.mu_list:
                if mu in fresh:
                    fh.write(json.dumps({"key": keys[mu], "point": _to_json(fresh[mu])}, sort_keys=True) + "\n")
    return results


def csv_text(results: list[PointResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in results:
        for r in p.records:
            w.writerow([
                SCHEMA_VERSION, fmt(r.mu), fmt(r.g), fmt(r.kappa), fmt(r.e_mu), fmt(r.b_mu_kappa),
                fmt(r.xi), fmt(r.delta_fermi), fmt(r.t_c), fmt(r.m_mu), fmt(r.thm1_functional),
                fmt(r.ratio), r.status,
            ])
    return buf.getvalue()


def jsonl_text(results: list[PointResult]) -> str:
    lines = []
    for p in results:
        for r in p.records:
            d = r.as_dict()
            d["schema_version"] = SCHEMA_VERSION
            lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + "\n"


def write_outputs(cfg: RunConfig, results: list[PointResult]) -> None:
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(csv_text(results))
    jpath = Path(cfg.jsonl) if cfg.jsonl else out.with_suffix(".jsonl")
    jpath.write_text(jsonl_text(results))


def summary(results: list[PointResult]) -> str:
    """Ratio and gap-functional trends over the converged points."""
    ok = [p for p in results if p.ok]
    lines = [f"points: {len(results)} total, {len(ok)} converged"]
    if not ok:
        return "\n".join(lines)
    kappa = 0.0 if any(r.kappa == 0.0 for r in ok[0].records) else ok[0].records[0].kappa
    lines.append(f"{'mu':>10} {'Xi/Tc':>12} {'|ratio-pi e^-g|':>16} {'thm1':>12} {'|thm1-target|':>14}")
    for p in ok:
        r = p.record(kappa)
        lines.append(
            f"{r.mu:>10.6g} {r.ratio:>12.8f} {abs(r.ratio - asy.UNIVERSAL_RATIO):>16.3e} "
            f"{r.thm1_functional:>12.6f} {abs(r.thm1_functional - asy.THM1_TARGET):>14.4e}"
        )
    dev_r = [abs(p.record(kappa).ratio - asy.UNIVERSAL_RATIO) for p in ok]
    dev_t = [abs(p.record(kappa).thm1_functional - asy.THM1_TARGET) for p in ok]
    lines.append(f"ratio deviation non-increasing: {asy.non_increasing(dev_r, slack=1e-8)}")
    lines.append(f"thm1 deviation non-increasing (kappa={kappa:g}): {asy.non_increasing(dev_t)}")
    return "\n".join(lines)
