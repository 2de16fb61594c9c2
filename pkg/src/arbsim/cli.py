"""Command-line entry points.

Subcommands:
    simulate  draw paths and dump per-path functionals to CSV
    verify    run the full certification battery and write artifacts
    price     superreplication price, closed form or Monte Carlo bounds
    report    re-render a stored report.json to text and SVG

Exit codes: 0 certification passed, 2 a check failed, 3 a precondition was
not met (including configuration errors), 4 an I/O error occurred.
"""

import argparse
import sys
import time
from pathlib import Path

from . import rng as rngmod
from .config import ExperimentConfig, load_config, with_overrides
from .models import sample_jump_paths, sample_paths, survival_asset_initial
from .plots import build_plot_data, render_plots
from .report import (
    build_payload,
    load_json,
    render_text,
    write_json,
    write_paths_csv,
)
from .strategies import (
    jump_superhedge_capital,
    jump_superhedge_terminals,
    sample_hedged_brownian,
    superreplication_price_complete,
    survival_hedge_capital,
    survival_holding_terminals,
)
from .types import ConfigurationError, IncompleteMarketError, Model, mean_estimate
from .verify import FAIL, PASS, SKIP, run_full_certification

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_SKIP = 3
EXIT_IO = 4

_EXIT_BY_VERDICT = {PASS: EXIT_PASS, FAIL: EXIT_FAIL, SKIP: EXIT_SKIP}


def _add_common(parser):
    parser.add_argument("--config", required=True, help="TOML experiment configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--paths", type=int, default=None, help="override the configured path count")
    parser.add_argument("--output", default=None, help="override the configured output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (results are identical for any value)")
    parser.add_argument("--quiet", action="store_true", help="suppress console output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arbsim",
        description="simulate markets built from a vanishing martingale and certify their arbitrage structure",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "draw paths and write per-path functionals to CSV"),
        ("verify", "run the certification battery and write report artifacts"),
        ("price", "superreplication price of the survival claim"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    p = sub.add_parser("report", help="re-render a stored report.json")
    p.add_argument("report_json", help="path to a report.json produced by verify")
    p.add_argument("--output", default=None, help="directory for re-rendered SVG files")
    p.add_argument("--quiet", action="store_true")
    return parser


def _strategy_outcomes(cfg: ExperimentConfig, n: int):
    """Ensemble plus zero-capital terminal gains of the model's canonical strategy."""
    market = cfg.market
    if market.model is Model.STOPPED_BROWNIAN:
        ens = sample_hedged_brownian(market.horizon, n, market.seed, threads=cfg.threads)
        return ens, ens.hedge_terminal - survival_hedge_capital(market.horizon.T)
    ens = sample_paths(market, n=n, purpose=rngmod.PURPOSE_SIMULATE, threads=cfg.threads)
    if not market.compensate_drift:
        return ens, None
    if market.model is Model.COND_EXPECTATION:
        stats = survival_holding_terminals(ens, survival_asset_initial(ens))
    else:
        stats = jump_superhedge_terminals(ens, market.law)
    return ens, stats.v0h_terminal


def cmd_simulate(cfg: ExperimentConfig, quiet: bool) -> int:
    n = min(cfg.market.n_paths, cfg.csv_sample) if cfg.csv_sample else cfg.market.n_paths
    try:
        ens, v0h = _strategy_outcomes(cfg, n)
    except (ConfigurationError, IncompleteMarketError):
        ens = sample_paths(cfg.market, n=n, purpose=rngmod.PURPOSE_SIMULATE, threads=cfg.threads)
        v0h = None
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "paths.csv"
    write_paths_csv(csv_path, ens, v0h, limit=n)
    if not quiet:
        zero_frac = float((ens.y_terminal == 0.0).mean())
        print(f"wrote {n} paths to {csv_path}")
        print(f"zero-hit fraction {zero_frac:.6f}, mean weight {float(ens.weights.mean()):.6f}")
    return EXIT_PASS


def cmd_verify(cfg: ExperimentConfig, quiet: bool) -> int:
    timings = {}
    t0 = time.perf_counter()
    report = run_full_certification(
        cfg.market,
        confidence=cfg.confidence,
        probe_times=cfg.probe_grid,
        threads=cfg.threads,
        hedge_grids=cfg.hedge_grids,
        hedge_paths=cfg.hedge_paths,
    )
    timings["certification_s"] = time.perf_counter() - t0
    plots_data = None
    if "svg" in cfg.report_formats:
        t1 = time.perf_counter()
        plots_data = build_plot_data(cfg, threads=cfg.threads)
        timings["plots_s"] = time.perf_counter() - t1
    payload = build_payload(cfg, report, timings, plots_data)

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.report_formats:
        write_json(outdir / "report.json", payload)
    if "csv" in cfg.report_formats:
        n = min(cfg.market.n_paths, cfg.csv_sample) if cfg.csv_sample else cfg.market.n_paths
        try:
            ens, v0h = _strategy_outcomes(cfg, n)
        except (ConfigurationError, IncompleteMarketError):
            ens = sample_paths(cfg.market, n=n, purpose=rngmod.PURPOSE_SIMULATE, threads=cfg.threads)
            v0h = None
        write_paths_csv(outdir / "paths.csv", ens, v0h, limit=n)
    if plots_data is not None:
        for name, svg in render_plots(plots_data).items():
            (outdir / name).write_text(svg, encoding="utf-8")
    if not quiet:
        print(render_text(payload), end="")
    return _EXIT_BY_VERDICT[report.overall]


def cmd_price(cfg: ExperimentConfig, quiet: bool) -> int:
    market = cfg.market
    try:
        price = superreplication_price_complete(market)
        if not quiet:
            print(f"superreplication price (closed form): {price:.12g}")
        return EXIT_PASS
    except IncompleteMarketError as exc:
        ens = sample_jump_paths(market, purpose=rngmod.PURPOSE_SIMULATE, threads=cfg.threads)
        survive = (ens.y_terminal > 0.0).astype(float)
        lower = mean_estimate(survive, confidence=cfg.confidence)
        upper = jump_superhedge_capital(market.law)
        if not quiet:
            print(f"market not complete: {exc}")
            print(
                f"Monte Carlo lower bound E[survival] = {lower.mean:.6f} "
                f"(se {lower.std_error:.2e}, n {lower.n})"
            )
            print(f"superreplicating capital upper bound x = {upper:.12g}")
        return EXIT_PASS


def cmd_report(args) -> int:
    try:
        payload = load_json(args.report_json)
    except (OSError, ValueError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(render_text(payload), end="")
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        plots_data = payload.get("plots")
        if plots_data:
            for name, svg in render_plots(plots_data).items():
                (outdir / name).write_text(svg, encoding="utf-8")
        (outdir / "report.txt").write_text(render_text(payload), encoding="utf-8")
    return EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(
            cfg,
            seed=args.seed,
            n_paths=args.paths,
            output_dir=args.output,
            threads=args.threads,
        )
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SKIP
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, args.quiet)
        if args.command == "verify":
            return cmd_verify(cfg, args.quiet)
        if args.command == "price":
            return cmd_price(cfg, args.quiet)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SKIP
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
