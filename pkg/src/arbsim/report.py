"""Persistence and rendering of certification runs.

report.json layout (all numbers are IEEE doubles in decimal):

    {
      "version":  "<package version[+git revision]>",
      "config":   {"market": {...}, "experiment": {...}},
      "overall":  "pass" | "fail" | "skip",
      "checks":   [{"name", "claim", "verdict", "estimate", "statistic", "detail"}, ...],
      "timings":  {"<stage>": seconds, ...},
      "plots":    {...}          # data behind the SVG renderings, optional
    }

paths.csv columns: ``path_id,y_T,weight,v0h_T,stop_reason``.
"""

import csv
import json
import subprocess
from pathlib import Path

from . import __version__
from .config import ExperimentConfig
from .types import Estimate, MarketConfig
from .verify import CertificationReport, CheckResult

CSV_COLUMNS = ("path_id", "y_T", "weight", "v0h_T", "stop_reason")

_REASON_NAMES = {0: "hit_zero", 1: "jumped", 2: "horizon_end"}


def version_string() -> str:
    """Package version, with the git revision appended when one is visible."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def estimate_to_dict(est: Estimate) -> dict:
    return {
        "mean": est.mean,
        "std_error": est.std_error,
        "n": est.n,
        "confidence": est.confidence,
    }


def check_to_dict(check: CheckResult) -> dict:
    return {
        "name": check.name,
        "claim": check.claim,
        "verdict": check.verdict,
        "estimate": estimate_to_dict(check.estimate) if check.estimate else None,
        "statistic": check.statistic,
        "detail": check.detail,
    }


def market_to_dict(m: MarketConfig) -> dict:
    out = {
        "model": m.model.value,
        "T": m.horizon.T,
        "grid_points": m.horizon.grid_points,
        "n_paths": m.n_paths,
        "seed": m.seed,
        "d": m.d,
        "compensate_drift": m.compensate_drift,
    }
    if m.lam is not None:
        out["lambda"] = m.lam
    if m.jump_law is not None:
        out["jump_law"] = {
            "atoms": [[s, p] for s, p in m.jump_law.atoms],
            "f_min": m.jump_law.f_min,
            "f_max": m.jump_law.f_max,
        }
    if m.base_model is not None:
        out["base_model"] = m.base_model.value
    return out


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "market": market_to_dict(cfg.market),
        "experiment": {
            "output_dir": cfg.output_dir,
            "report_formats": list(cfg.report_formats),
            "confidence": cfg.confidence,
            "probe_times": list(cfg.probe_grid),
            "threads": cfg.threads,
            "csv_sample": cfg.csv_sample,
            "hedge_grids": list(cfg.hedge_grids),
            "hedge_paths": cfg.hedge_paths,
        },
    }


def build_payload(
    cfg: ExperimentConfig,
    report: CertificationReport,
    timings: dict,
    plots: dict = None,
) -> dict:
    payload = {
        "version": version_string(),
        "config": config_to_dict(cfg),
        "overall": report.overall,
        "checks": [check_to_dict(c) for c in report.checks],
        "timings": {k: float(v) for k, v in timings.items()},
    }
    if plots is not None:
        payload["plots"] = plots
    return payload


def statistics_bytes(payload: dict) -> bytes:
    """Canonical bytes of everything the market config and seed determine:
    the market section, every check, the plot data, and the overall verdict.
    Two runs must agree on these bytes regardless of thread count or where
    the artifacts were written."""
    trimmed = {
        "market": payload["config"]["market"],
        "overall": payload["overall"],
        "checks": payload["checks"],
        "plots": payload.get("plots"),
    }
    return json.dumps(trimmed, sort_keys=True, separators=(",", ":")).encode()


def write_json(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_paths_csv(path, ensemble, v0h_terminal=None, limit: int = 10_000):
    """Dump per-path functionals for the first ``limit`` paths."""
    n = min(ensemble.n, limit) if limit else ensemble.n
    reasons = ensemble.stop_reason
    weights = ensemble.weights
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in range(n):
            v0h = "" if v0h_terminal is None else repr(float(v0h_terminal[i]))
            writer.writerow(
                [
                    i,
                    repr(float(ensemble.y_terminal[i])),
                    repr(float(weights[i])),
                    v0h,
                    _REASON_NAMES[int(reasons[i])],
                ]
            )


def render_text(payload: dict) -> str:
    """Human-readable rendering of a report payload."""
    lines = []
    market = payload["config"]["market"]
    lines.append(f"model: {market['model']}   seed: {market['seed']}   paths: {market['n_paths']}")
    lines.append(f"version: {payload['version']}")
    lines.append("")
    name_w = max(len(c["name"]) for c in payload["checks"])
    for c in payload["checks"]:
        head = f"[{c['verdict'].upper():4s}] {c['name']:<{name_w}}"
        if c["estimate"] is not None:
            e = c["estimate"]
            head += f"  mean={e['mean']:.6f} se={e['std_error']:.2e} n={e['n']}"
        elif c["statistic"] is not None:
            head += f"  statistic={c['statistic']:.6g}"
        lines.append(head)
        lines.append(f"        {c['claim']}")
        if c["detail"]:
            lines.append(f"        {c['detail']}")
    lines.append("")
    lines.append(f"OVERALL: {payload['overall'].upper()}")
    return "\n".join(lines) + "\n"
