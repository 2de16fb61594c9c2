"""Acceptance suite: the headline numerical claims, one test per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS/FAIL line per
criterion.  Every tolerance is fixed here; targets marked as quadrature are
computed from their stated independent oracle, never hardcoded from memory.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate
from scipy.special import ndtr

from arbsim import (
    JumpLaw,
    MarketConfig,
    Model,
    TimeHorizon,
    WeightedSample,
    check_strict_lm_gap,
    delta_hedge_study,
    jump_superhedge_capital,
    jump_superhedge_terminals,
    mean_estimate,
    p_probability,
    sample_brownian_paths,
    sample_jump_paths,
    sample_under_p_direct,
)
from arbsim.cli import EXIT_FAIL, EXIT_PASS, EXIT_SKIP, main

E_INV = math.exp(-1.0)
CONFIGS = Path(__file__).parent.parent / "configs"

Z99 = 2.5758293035489004


def announce(num, ok: bool, text: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {text}")


def jump_config(n_paths: int, law=None, seed: int = 42) -> MarketConfig:
    return MarketConfig(
        model=Model.COMPOUND_POISSON if law is not None else Model.COMPENSATED_POISSON,
        horizon=TimeHorizon(T=1.0),
        n_paths=n_paths,
        seed=seed,
        lam=1.0,
        jump_law=law,
    )


def test_criterion_1_zero_hit_probability():
    """Q(Y(T) = 0) = 1/e for the unit-jump model, N = 1e6."""
    ens = sample_jump_paths(jump_config(1_000_000))
    freq = float((ens.y_terminal == 0.0).mean())
    se = math.sqrt(E_INV * (1.0 - E_INV) / ens.n)
    ok = abs(freq - E_INV) <= 3 * se and abs(se - 4.8e-4) < 1e-4
    announce(1, ok, f"zero-hit frequency {freq:.6f} vs 1/e = {E_INV:.6f} (3 SE = {3 * se:.2e})")
    assert ok


def test_criterion_2_strict_deflator_gap():
    """Reweighted E[1/Y(T)] sits at 1 - 1/e and its 99% CI stays below 1."""
    ens = sample_jump_paths(jump_config(1_000_000))
    res = check_strict_lm_gap(ens.y_terminal, ens.weights, confidence=0.99)
    est = res.estimate
    target = 1.0 - E_INV
    within = abs(est.mean - target) <= 3 * est.std_error
    upper = est.mean + Z99 * est.std_error
    ok = within and upper < 1.0 and res.verdict == "pass"
    announce(2, ok, f"E[1/Y(T)] = {est.mean:.6f} vs {target:.6f}, 99% CI upper {upper:.6f} < 1")
    assert ok


def test_criterion_3_pathwise_strong_arbitrage():
    """Two-point law: every path superreplicates and every surviving path
    clears the 1 - x margin, exactly (no statistics)."""
    law = JumpLaw.two_point(0.9, 1.1)
    x = jump_superhedge_capital(law)
    assert x == pytest.approx((11.0 / 9.0) * (1.0 - math.exp(-10.0 / 11.0)), abs=1e-12)
    ens = sample_jump_paths(jump_config(100_000, law=law))
    stats = jump_superhedge_terminals(ens, law)
    indicator = (ens.y_terminal > 0.0).astype(float)
    superrep = np.all(stats.v_terminal >= indicator - 1e-9)
    survivors = ens.y_terminal > 0.0
    wins = np.all(stats.v0h_terminal[survivors] >= (1.0 - x) - 1e-9)
    ok = bool(superrep and wins)
    announce(
        3,
        ok,
        f"x = {x:.6f}; superreplication on {ens.n} paths: {bool(superrep)}; "
        f"margin >= 1 - x on {int(survivors.sum())} survivors: {bool(wins)}",
    )
    assert ok


def test_criterion_4_no_arbitrage_under_sampling_measure():
    """Before reweighting the strategy loses on the zero-hit paths."""
    law = JumpLaw.two_point(0.9, 1.1)
    ens = sample_jump_paths(jump_config(1_000_000, law=law))
    stats = jump_superhedge_terminals(ens, law)
    frac = float((stats.v0h_terminal < 0.0).mean())
    se = math.sqrt(E_INV * (1.0 - E_INV) / ens.n)
    ok = abs(frac - E_INV) <= 3 * se
    announce(4, ok, f"losing fraction {frac:.6f} vs 1/e = {E_INV:.6f} (3 SE = {3 * se:.2e})")
    assert ok


def test_criterion_5_degenerate_reduction():
    """Unit-size law reproduces the unit-jump capital and hits the claim
    with equality on jumping paths."""
    law = JumpLaw.degenerate()
    x = jump_superhedge_capital(law)
    capital_exact = abs(x - (1.0 - E_INV)) <= 1e-12
    ens = sample_jump_paths(jump_config(100_000, law=law))
    stats = jump_superhedge_terminals(ens, law)
    jumped = ens.y_terminal > 0.0
    max_dev = float(np.max(np.abs(stats.v_terminal[jumped] - 1.0)))
    ok = capital_exact and max_dev <= 1e-12
    announce(5, ok, f"x - (1 - 1/e) exact: {capital_exact}; max |V(T) - 1| on jumps = {max_dev:.2e}")
    assert ok


def test_criterion_6a_bridge_corrected_hit_probability():
    """Absorbed diffusion hit frequency matches the first-passage probability
    at N = 1e6 with one thousand steps."""
    ens = sample_brownian_paths(TimeHorizon(T=1.0, grid_points=1000), 1_000_000, 42)
    target = 2.0 * ndtr(-1.0)
    freq = float(ens.hit.mean())
    se = math.sqrt(target * (1.0 - target) / ens.n)
    ok = abs(freq - target) <= 3 * se
    announce(6, ok, f"hit frequency {freq:.6f} vs 2*Phi(-1) = {target:.6f} (3 SE = {3 * se:.2e})")
    assert ok


def test_criterion_6b_hedge_error_order_one_half():
    """Delta-hedge RMS error falls monotonically over 1e2/1e3/1e4 steps with
    per-decade ratios consistent with order 1/2."""
    study = delta_hedge_study(1.0, (100, 1000, 10000), 100_000, 42)
    rms = [r for _, r in study]
    ratios = [rms[0] / rms[1], rms[1] / rms[2]]
    decreasing = rms[0] > rms[1] > rms[2]
    in_band = all(2.5 <= r <= 4.5 for r in ratios)
    ok = decreasing and in_band
    announce(
        6,
        ok,
        "hedge RMS " + ", ".join(f"{s}: {r:.5f}" for s, r in study)
        + f"; ratios {ratios[0]:.3f}, {ratios[1]:.3f} in [2.5, 4.5]",
    )
    assert ok


def test_criterion_7_cross_estimator_consistency():
    """Rejection sampling and reweighting agree on the early-jump probability.

    The target is fixed by quadrature of the exponential density times the
    terminal weight, exp(-t) * (2 - t) on [0, 1/2].
    """
    target = integrate.quad(lambda t: math.exp(-t) * (2.0 - t), 0.0, 0.5)[0]
    n = 100_000
    cfg = jump_config(n)
    ens = sample_jump_paths(cfg)
    ind = (np.nan_to_num(ens.jump_time, nan=np.inf) <= 0.5).astype(float)
    reweighted = p_probability(WeightedSample(ind, ens.weights))
    direct = sample_under_p_direct(cfg, n)
    direct_est = mean_estimate((direct.paths.jump_time <= 0.5).astype(float))
    diff = abs(reweighted.mean - direct_est.mean)
    joint = Z99 * math.hypot(reweighted.std_error, direct_est.std_error)
    ok = (
        diff <= joint
        and abs(reweighted.mean - target) <= 3 * reweighted.std_error
        and abs(direct_est.mean - target) <= 3 * direct_est.std_error
    )
    announce(
        7,
        ok,
        f"P(jump by 1/2): reweighted {reweighted.mean:.6f}, direct {direct_est.mean:.6f}, "
        f"quadrature target {target:.6f}, |diff| {diff:.6f} <= joint {joint:.6f}",
    )
    assert ok


def test_criterion_8_certification_exit_codes(tmp_path):
    """verify exits 0 on the three passing markets, 2 on the uncompensated
    control, 3 on the capital-bound control."""
    runs = [
        ("compensated_poisson.toml", EXIT_PASS),
        ("compound_twopoint.toml", EXIT_PASS),
        ("stopped_brownian.toml", EXIT_PASS),
        ("control_uncompensated.toml", EXIT_FAIL),
        ("control_capital_bound.toml", EXIT_SKIP),
    ]
    results = []
    ok = True
    for i, (name, expected) in enumerate(runs):
        code = main([
            "verify", "--config", str(CONFIGS / name),
            "--output", str(tmp_path / f"run{i}"), "--quiet",
        ])
        results.append(f"{name} -> {code} (want {expected})")
        ok = ok and code == expected
    announce(8, ok, "; ".join(results))
    assert ok


def test_criterion_9_thread_count_determinism(tmp_path):
    """Identical (config, seed) produce byte-identical statistics across
    different worker counts."""
    cfg = CONFIGS / "compound_twopoint.toml"
    payloads = []
    for threads, tag in ((1, "t1"), (4, "t4")):
        out = tmp_path / tag
        code = main([
            "verify", "--config", str(cfg), "--output", str(out),
            "--paths", "50000", "--threads", str(threads), "--quiet",
        ])
        assert code == EXIT_PASS
        payloads.append(json.loads((out / "report.json").read_text()))
    a, b = payloads
    stats_a = json.dumps({"checks": a["checks"], "overall": a["overall"]}, sort_keys=True)
    stats_b = json.dumps({"checks": b["checks"], "overall": b["overall"]}, sort_keys=True)
    ok = stats_a == stats_b
    announce(9, ok, f"statistics bytes equal across 1 vs 4 threads: {ok}")
    assert ok
