"""Deterministic SVG charts for certification reports.

Charts are rendered from plain data dictionaries that are embedded in
report.json, so a stored report can be re-rendered to byte-identical SVG
without touching the simulators.  No raster or plotting dependencies.
"""

import math

import numpy as np

from . import rng as rngmod
from .config import ExperimentConfig
from .models import (
    JUMP_MODELS,
    sample_brownian_paths,
    sample_jump_paths,
    sample_paths,
    survival_asset_at,
    survival_asset_initial,
)
from .strategies import jump_superhedge_capital, sample_hedged_brownian
from .types import ConfigurationError, Model

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#17becf")

_GAP_LADDER = (1000, 3162, 10000, 31623, 100000)


def weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Quantile of the reweighted distribution of ``values``."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    cw = np.cumsum(w)
    total = cw[-1]
    if total <= 0:
        return float("nan")
    idx = int(np.searchsorted(cw / total, q, side="left"))
    return float(v[min(idx, v.size - 1)])


# ---------------------------------------------------------------------------
# Plot data
# ---------------------------------------------------------------------------


def build_plot_data(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Simulate the small ensembles behind the three report charts."""
    market = cfg.market
    T = market.horizon.T
    n_sample = min(market.n_paths, 4000)
    n_show = min(n_sample, 20)
    times = np.linspace(0.0, T, 33)

    if market.effective_model in JUMP_MODELS:
        ens = sample_jump_paths(
            market, n=n_sample, purpose=rngmod.PURPOSE_SIMULATE,
            threads=threads, stream_offset=1 << 30,
        )
        y_matrix = np.stack([ens.y_at(t) for t in times])
    else:
        ens = sample_brownian_paths(
            market.horizon, n_sample, market.seed,
            purpose=rngmod.PURPOSE_SIMULATE, threads=threads,
            stream_offset=1 << 30, probe_times=times,
        )
        y_matrix = ens.probe_values
        times = np.asarray(ens.probe_times)

    weights = ens.weights
    band_low = [weighted_quantile(row, weights, 0.05) for row in y_matrix]
    band_high = [weighted_quantile(row, weights, 0.95) for row in y_matrix]
    data = {
        "trajectories": {
            "times": [float(t) for t in times],
            "paths": [[float(v) for v in y_matrix[:, j]] for j in range(n_show)],
            "band_low": band_low,
            "band_high": band_high,
        }
    }

    fan = _value_fan(cfg, times, ens, n_show, threads)
    if fan is not None:
        data["value_fan"] = fan

    n_gap = min(market.n_paths, 100_000)
    gap_ens = sample_paths(market, n=n_gap, purpose=rngmod.PURPOSE_STRICT_LM, threads=threads)
    ratio = (gap_ens.y_terminal > 0.0).astype(float)
    ns, means, ses = [], [], []
    for N in _GAP_LADDER:
        if N > n_gap:
            break
        head = ratio[:N]
        ns.append(int(N))
        means.append(float(1.0 - head.mean()))
        ses.append(float(head.std(ddof=1) / math.sqrt(N)))
    data["gap_convergence"] = {"n": ns, "estimate": means, "se": ses}
    return data


def _value_fan(cfg: ExperimentConfig, times, ens, n_show: int, threads: int):
    market = cfg.market
    if market.model is Model.STOPPED_BROWNIAN:
        hedged = sample_hedged_brownian(
            market.horizon, n_show, market.seed, threads=1,
            stream_offset=1 << 31, probe_times=times,
        )
        return {
            "times": [float(t) for t in hedged.probe_times],
            "paths": [
                [float(v) for v in hedged.probe_hedge_values[:, j]] for j in range(n_show)
            ],
            "capital": float(hedged.probe_hedge_values[0, 0]),
        }
    if not market.compensate_drift:
        return None
    if market.model is Model.COND_EXPECTATION:
        x = survival_asset_initial(ens)
        fan = np.stack([survival_asset_at(ens, t) for t in times])[:, :n_show]
        return {
            "times": [float(t) for t in times],
            "paths": [[float(v) for v in fan[:, j]] for j in range(n_show)],
            "capital": float(x),
        }
    try:
        x = jump_superhedge_capital(market.law)
    except ConfigurationError:
        return None
    law = market.law
    coef = law.f_max / law.f_min
    w0 = math.exp(-1.0 / law.f_max)
    jumped = ens.stop_reason == 1
    rows = []
    for t in times:
        s = np.minimum(t, ens.stop_time)
        ws = np.exp(-(1.0 - ens.lam * s) / law.f_max)
        v = x - coef * (ws - w0)
        jump_leg = jumped & (ens.jump_time <= t)
        v = v + np.where(
            jump_leg,
            np.exp(-(1.0 - ens.lam * np.where(jumped, ens.jump_time, 0.0)) / law.f_max)
            / law.f_min
            * np.where(jumped, ens.jump_size, 0.0),
            0.0,
        )
        rows.append(v[:n_show])
    fan = np.stack(rows)
    return {
        "times": [float(t) for t in times],
        "paths": [[float(v) for v in fan[:, j]] for j in range(n_show)],
        "capital": float(x),
    }


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(v, ".2f")


def line_chart(
    title: str,
    xlabel: str,
    ylabel: str,
    series: list,
    width: int = 720,
    height: int = 440,
) -> str:
    """Render line/band series to a standalone SVG string.

    Each series is a dict with ``kind`` ("line" or "band"), ``xs`` and either
    ``ys`` (line) or ``lo``/``hi`` (band), plus optional color/width/opacity.
    """
    margin = 62
    xs_all, ys_all = [], []
    for s in series:
        xs_all.extend(s["xs"])
        ys_all.extend(s.get("ys", []) or [])
        ys_all.extend(s.get("lo", []) or [])
        ys_all.extend(s.get("hi", []) or [])
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
    ]
    # axes and ticks
    ax_color = "#333333"
    parts.append(
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="{ax_color}"/>'
    )
    parts.append(
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="{ax_color}"/>'
    )
    for i in range(5):
        fx = x0 + i * (x1 - x0) / 4
        fy = y0 + i * (y1 - y0) / 4
        px, py = sx(fx), sy(fy)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{height - margin}" x2="{_fmt(px)}" '
            f'y2="{height - margin + 5}" stroke="{ax_color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{format(fx, ".4g")}</text>'
        )
        parts.append(
            f'<line x1="{margin - 5}" y1="{_fmt(py)}" x2="{margin}" y2="{_fmt(py)}" '
            f'stroke="{ax_color}"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{_fmt(py + 3)}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{format(fy, ".4g")}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" font-family="monospace" '
        f'font-size="12" transform="rotate(-90 16 {height / 2:.0f})">{ylabel}</text>'
    )
    for s in series:
        color = s.get("color", PALETTE[0])
        opacity = s.get("opacity", 1.0)
        if s["kind"] == "band":
            pts = [f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s["xs"], s["hi"])]
            pts += [
                f"{_fmt(sx(x))},{_fmt(sy(y))}"
                for x, y in zip(reversed(s["xs"]), reversed(s["lo"]))
            ]
            parts.append(
                f'<polygon points="{" ".join(pts)}" fill="{color}" opacity="{opacity}" '
                f'stroke="none"/>'
            )
        else:
            pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s["xs"], s["ys"]))
            w = s.get("width", 1.0)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="{w}" opacity="{opacity}"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_plots(plot_data: dict) -> dict:
    """Turn embedded plot data into named SVG documents."""
    out = {}
    traj = plot_data.get("trajectories")
    if traj:
        series = [
            {
                "kind": "band",
                "xs": traj["times"],
                "lo": traj["band_low"],
                "hi": traj["band_high"],
                "color": PALETTE[1],
                "opacity": 0.25,
            }
        ]
        series += [
            {"kind": "line", "xs": traj["times"], "ys": path, "color": PALETTE[0],
             "opacity": 0.6, "width": 0.8}
            for path in traj["paths"]
        ]
        out["trajectories.svg"] = line_chart(
            "sample Y paths with reweighted 5-95% envelope", "t", "Y(t)", series
        )
    fan = plot_data.get("value_fan")
    if fan:
        series = [
            {"kind": "line", "xs": fan["times"], "ys": path, "color": PALETTE[2],
             "opacity": 0.6, "width": 0.8}
            for path in fan["paths"]
        ]
        series.append(
            {
                "kind": "line",
                "xs": [fan["times"][0], fan["times"][-1]],
                "ys": [fan["capital"], fan["capital"]],
                "color": PALETTE[1],
                "width": 1.5,
            }
        )
        out["value_fan.svg"] = line_chart(
            "strategy value paths (horizontal line: initial capital x)", "t", "V(t)", series
        )
    gap = plot_data.get("gap_convergence")
    if gap and gap["n"]:
        xs = [math.log10(n) for n in gap["n"]]
        series = [
            {
                "kind": "band",
                "xs": xs,
                "lo": [m - 2.576 * s for m, s in zip(gap["estimate"], gap["se"])],
                "hi": [m + 2.576 * s for m, s in zip(gap["estimate"], gap["se"])],
                "color": PALETTE[0],
                "opacity": 0.25,
            },
            {"kind": "line", "xs": xs, "ys": gap["estimate"], "color": PALETTE[0], "width": 1.5},
        ]
        out["gap_convergence.svg"] = line_chart(
            "deflator gap estimate vs sample size", "log10(N)", "1 - E[1/Y(T)]", series
        )
    return out
