"""Certification battery: assembles the headline claim from testable pieces.

A configured market passes when, simultaneously, (a) the auxiliary process Y
is a martingale under the reference measure and hits zero with positive
probability but continuously, (b) a strategy started from capital x < 1 ends
at or above the survival indicator on every path, hence wins almost surely
under the reweighted measure, and (c) the reciprocal deflator 1/Y is strictly
positive at the horizon with expectation strictly below one, and deflated
assets satisfy the supermartingale bound.  Together (b) certifies the failure
of the classical no-arbitrage property while (c) certifies that no unbounded
profit is possible.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng as rngmod
from .models import (
    check_assumption_A0,
    sample_brownian_paths,
    sample_jump_paths,
    sample_paths,
    survival_asset_at,
    survival_asset_initial,
)
from .strategies import (
    ADMISSIBILITY_TOL,
    StrategyPathStats,
    check_admissibility,
    delta_hedge_study,
    jump_superhedge_capital,
    jump_superhedge_terminals,
    sample_hedged_brownian,
    survival_hedge_capital,
    survival_holding_terminals,
)
from .types import (
    ConfigurationError,
    Estimate,
    IncompleteMarketError,
    JUMP_MODELS,
    MarketConfig,
    Model,
    mean_estimate,
    z_value,
)

PASS = "pass"
FAIL = "fail"
SKIP = "skip"

DEFAULT_HEDGE_GRIDS = (100, 1000, 10000)
DEFAULT_HEDGE_PATHS = 20_000
HEDGE_RATIO_RANGE = (2.5, 4.5)


@dataclass(frozen=True)
class CheckResult:
    """One certified (or failed, or skipped) claim with its statistics."""

    name: str
    verdict: str
    claim: str
    estimate: Optional[Estimate] = None
    statistic: Optional[float] = None
    detail: str = ""


@dataclass(frozen=True)
class CertificationReport:
    """Ordered check results plus the aggregate verdict.

    ``overall`` is fail when any check fails, skip when none fail but some
    were skipped for unmet preconditions, and pass otherwise.
    """

    checks: tuple
    overall: str

    def find(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _overall(checks) -> str:
    verdicts = [c.verdict for c in checks]
    if FAIL in verdicts:
        return FAIL
    if SKIP in verdicts:
        return SKIP
    return PASS


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------


def check_q_martingale(
    probe_times: Sequence[float],
    y_values: np.ndarray,
    confidence: float = 0.99,
    target: float = 1.0,
) -> CheckResult:
    """Two-sided test that E[Y(t)] equals the target at every probe time.

    The per-probe level is Bonferroni-adjusted so the whole family holds at
    the requested confidence.  A probe with zero sample variance (time zero)
    must match the target exactly.
    """
    probe_times = tuple(probe_times)
    m = len(probe_times)
    per_test = 1.0 - (1.0 - confidence) / m
    z = z_value(per_test)
    worst = None
    worst_score = -1.0
    rejected = []
    for t, row in zip(probe_times, np.atleast_2d(y_values)):
        est = mean_estimate(row, confidence=confidence)
        dev = abs(est.mean - target)
        if est.std_error == 0.0:
            score = 0.0 if dev == 0.0 else math.inf
        else:
            score = dev / est.std_error
        if score > worst_score:
            worst_score = score
            worst = (t, est)
        if score > z:
            rejected.append(t)
    verdict = PASS if not rejected else FAIL
    t_w, est_w = worst
    detail = (
        f"max |mean - {target}| z-score {worst_score:.3f} at t={t_w:.4f} "
        f"(Bonferroni threshold {z:.3f} over {m} probes)"
    )
    if rejected:
        detail += f"; rejected at t={', '.join(f'{t:.4f}' for t in rejected)}"
    return CheckResult(
        name="q_martingale",
        verdict=verdict,
        claim="E[Y(t)] = 1 at every probe time under the reference measure",
        estimate=est_w,
        statistic=float(worst_score),
        detail=detail,
    )


def check_strict_lm_gap(
    y_terminal: np.ndarray,
    weights: np.ndarray,
    confidence: float = 0.99,
) -> CheckResult:
    """Certify strictness of 1/Y at the horizon under the reweighted measure.

    The reweighted estimator of E[1/Y(T)] must have its confidence-interval
    upper bound strictly below 1/Y(0) = 1, and every path carrying positive
    weight must have a finite positive reciprocal.
    """
    pos = weights > 0.0
    ratio = np.zeros_like(weights)
    ratio[pos] = weights[pos] / y_terminal[pos]
    est = mean_estimate(ratio, confidence=confidence)
    upper = est.mean + est.half_width()
    positive_ok = bool(np.all(y_terminal[pos] > 0.0))
    verdict = PASS if (upper < 1.0 and positive_ok) else FAIL
    gap = 1.0 - est.mean
    return CheckResult(
        name="strict_lm_gap",
        verdict=verdict,
        claim="E[1/Y(T)] < 1/Y(0) under the reweighted measure: the deflator is strict",
        estimate=est,
        statistic=float(gap),
        detail=(
            f"gap 1 - E[1/Y(T)] = {gap:.6f}, CI upper bound {upper:.6f} (must be < 1); "
            f"reciprocal positive on all weighted paths: {positive_ok}"
        ),
    )


def check_deflator_positivity(y_terminal: np.ndarray, weights: np.ndarray) -> CheckResult:
    """Exact clause: 1/Y(T) is strictly positive on every path carrying weight."""
    pos = weights > 0.0
    ok = bool(np.all(y_terminal[pos] > 0.0))
    min_y = float(y_terminal[pos].min()) if pos.any() else math.nan
    return CheckResult(
        name="deflator_positive_terminal",
        verdict=PASS if ok else FAIL,
        claim="the deflator terminal value is strictly positive almost surely",
        statistic=min_y,
        detail=f"minimum Y(T) over weighted paths: {min_y:.6g}",
    )


def check_deflated_supermartingale(
    probe_times: Sequence[float],
    asset_values: np.ndarray,
    y_values: np.ndarray,
    weights: np.ndarray,
    s0: float,
    confidence: float = 0.99,
    asset_label: str = "asset_1",
) -> CheckResult:
    """One-sided test that reweighted means of S(t)/Y(t) never exceed S(0).

    When the deflated ratio is constant across all weighted paths the check
    is exact (the expectation of a constant), which covers the case where the
    traded asset is Y itself.
    """
    asset_values = np.atleast_2d(asset_values)
    y_values = np.atleast_2d(y_values)
    if np.any(asset_values < 0):
        raise ValueError("deflated supermartingale check requires nonnegative asset values")
    probe_times = tuple(probe_times)
    m = len(probe_times)
    per_test = 1.0 - (1.0 - confidence) / m
    z1 = z_value(per_test, two_sided=False)
    pos = weights > 0.0
    worst_excess = -math.inf
    worst = None
    rejected = []
    exact = True
    for t, s_row, y_row in zip(probe_times, asset_values, y_values):
        ratio = np.zeros_like(weights)
        ratio[pos] = s_row[pos] / y_row[pos]
        if exact and (not pos.any() or np.ptp(ratio[pos]) > 1e-12):
            exact = False
        est = mean_estimate(weights * ratio, confidence=confidence)
        excess = est.mean - s0
        if excess > worst_excess:
            worst_excess = excess
            worst = (t, est)
        if est.std_error > 0 and excess > z1 * est.std_error:
            rejected.append(t)
        if est.std_error == 0 and excess > 1e-12:
            rejected.append(t)
    if exact:
        # constant deflated ratio: its expectation is that constant, exactly
        const = float((asset_values[0][pos] / y_values[0][pos])[0]) if pos.any() else 0.0
        ok = const <= s0 + 1e-12
        return CheckResult(
            name=f"deflated_supermartingale_{asset_label}",
            verdict=PASS if ok else FAIL,
            claim="E[S(t)/Y(t)] <= S(0) under the reweighted measure at every probe time",
            statistic=const,
            detail=f"deflated ratio is constant {const:.12g} on weighted paths; bound S(0)={s0:.12g}",
        )
    t_w, est_w = worst
    verdict = PASS if not rejected else FAIL
    detail = (
        f"max excess E[S(t)/Y(t)] - S(0) = {worst_excess:.6f} at t={t_w:.4f} "
        f"(one-sided Bonferroni threshold {z1:.3f} sd over {m} probes)"
    )
    if rejected:
        detail += f"; rejected at t={', '.join(f'{t:.4f}' for t in rejected)}"
    return CheckResult(
        name=f"deflated_supermartingale_{asset_label}",
        verdict=verdict,
        claim="E[S(t)/Y(t)] <= S(0) under the reweighted measure at every probe time",
        estimate=est_w,
        statistic=float(worst_excess),
        detail=detail,
    )


def certify_strong_arbitrage(
    stats: StrategyPathStats,
    weights: np.ndarray,
    tol: float = ADMISSIBILITY_TOL,
) -> CheckResult:
    """Pathwise certificate that the strategy wins almost surely after reweighting.

    Requires: terminal value at least the survival indicator on every path,
    zero-capital gains at least 1 - x on every path carrying weight, capital
    x below one, and admissibility at level x.  All clauses are exact up to
    the stated floating-point tolerance; nothing statistical enters.
    """
    pos = weights > 0.0
    indicator = (weights > 0.0).astype(float)
    superrep = bool(np.all(stats.v_terminal >= indicator - tol))
    margin = 1.0 - stats.x
    wins = bool(np.all(stats.v0h_terminal[pos] >= margin - tol)) if pos.any() else False
    capital_ok = stats.x < 1.0
    admissible = check_admissibility(stats, alpha=stats.x)
    ok = superrep and wins and capital_ok and admissible
    min_gain = float(stats.v0h_terminal[pos].min()) if pos.any() else math.nan
    n_pos = int(pos.sum())
    return CheckResult(
        name="strong_arbitrage",
        verdict=PASS if ok else FAIL,
        claim="from zero capital the strategy ends strictly positive on almost every reweighted path",
        statistic=min_gain,
        detail=(
            f"superreplication on all {weights.size} paths: {superrep}; "
            f"gains >= 1 - x = {margin:.6f} on all {n_pos} weighted paths "
            f"(min gain {min_gain:.6f}); x = {stats.x:.6f} < 1: {capital_ok}; "
            f"admissible at alpha = x: {admissible}"
        ),
    )


def check_q_loss_frequency(v0h_terminal: np.ndarray, confidence: float = 0.99) -> CheckResult:
    """The same strategy must lose with positive probability before reweighting.

    Passes when the confidence interval for the losing-path frequency under
    the reference measure stays away from zero; this is what makes the win a
    consequence of the measure change, not a money pump under both measures.
    """
    loss = v0h_terminal < 0.0
    p = float(loss.mean())
    n = v0h_terminal.size
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
    est = Estimate(mean=p, std_error=se, n=n, confidence=confidence)
    lower = p - est.half_width()
    return CheckResult(
        name="q_loss_frequency",
        verdict=PASS if lower > 0.0 else FAIL,
        claim="under the reference measure the strategy loses with positive probability",
        estimate=est,
        statistic=p,
        detail=f"losing fraction {p:.6f}, CI lower bound {lower:.6f} must be > 0",
    )


def check_hedge_convergence(
    T: float,
    grids: Sequence[int] = DEFAULT_HEDGE_GRIDS,
    n_paths: int = DEFAULT_HEDGE_PATHS,
    seed: int = 0,
    threads: int = 1,
    ratio_range: tuple = HEDGE_RATIO_RANGE,
) -> CheckResult:
    """Certify that the discrete delta hedge replicates the claim in the limit.

    The terminal replication error RMS must decrease strictly across the grid
    ladder with successive ratios consistent with order one-half in the step
    count (a tenfold grid refinement should shrink the RMS by about sqrt(10)).
    """
    study = delta_hedge_study(T, grids, n_paths, seed, threads=threads)
    rms = [r for _, r in study]
    ratios = [rms[i] / rms[i + 1] for i in range(len(rms) - 1)]
    decreasing = all(a > b for a, b in zip(rms, rms[1:]))
    in_range = all(ratio_range[0] <= r <= ratio_range[1] for r in ratios)
    ok = decreasing and in_range
    detail = "; ".join(f"steps={s}, rms={r:.6f}" for s, r in study)
    detail += "; ratios " + ", ".join(f"{r:.3f}" for r in ratios)
    detail += f" (required within [{ratio_range[0]}, {ratio_range[1]}])"
    return CheckResult(
        name="strong_arbitrage_hedge_convergence",
        verdict=PASS if ok else FAIL,
        claim="the grid-rebalanced hedge converges to exact replication at order 1/2",
        statistic=float(ratios[-1]) if ratios else math.nan,
        detail=detail,
    )


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def _probe_values(config: MarketConfig, purpose: int, n: int, probe_times, threads: int):
    """Sample an ensemble and return it with its probe-time Y values."""
    if config.effective_model in JUMP_MODELS:
        ens = sample_jump_paths(config, n=n, purpose=purpose, threads=threads)
        return ens, tuple(probe_times), np.stack([ens.y_at(t) for t in probe_times])
    ens = sample_brownian_paths(
        config.horizon,
        n,
        config.seed,
        purpose=purpose,
        threads=threads,
        probe_times=probe_times,
    )
    return ens, ens.probe_times, ens.probe_values


def run_full_certification(
    config: MarketConfig,
    confidence: float = 0.99,
    probe_times: Optional[Sequence[float]] = None,
    threads: int = 1,
    hedge_grids: Sequence[int] = DEFAULT_HEDGE_GRIDS,
    hedge_paths: int = DEFAULT_HEDGE_PATHS,
) -> CertificationReport:
    """Run the whole battery for one configured market.

    Check order: admission of the zero-hitting construction, the martingale
    property of Y, the superreplication capital and strategy certificates,
    then the deflator checks.  A precondition failure inside the strategy leg
    records skips (not failures) for the checks it blocks.
    """
    T = config.horizon.T
    if probe_times is None:
        probe_times = tuple(np.linspace(0.0, T, 10))
    n = config.n_paths
    checks = []

    a0 = check_assumption_A0(config, n_probe=n, threads=threads, confidence=confidence)
    a0_detail = "; ".join(f"{name}: {'ok' if ok else 'VIOLATED'} ({d})" for name, ok, d in a0.clauses)
    checks.append(
        CheckResult(
            name="zero_hit_admission",
            verdict=PASS if a0.passed else FAIL,
            claim="Y hits zero with positive probability, continuously, and not surely",
            estimate=a0.frequency,
            statistic=a0.frequency.mean,
            detail=a0_detail,
        )
    )

    _, pt, yv = _probe_values(config, rngmod.PURPOSE_Q_MARTINGALE, n, probe_times, threads)
    checks.append(check_q_martingale(pt, yv, confidence))

    if config.model is Model.STOPPED_BROWNIAN:
        x = survival_hedge_capital(T)
        checks.append(
            CheckResult(
                name="superreplication_capital",
                verdict=PASS if x < 1.0 else FAIL,
                claim="the survival claim is superreplicable from capital x < 1",
                statistic=x,
                detail=f"delta-hedge capital x = {x:.6f}",
            )
        )
        checks.append(
            CheckResult(
                name="admissibility",
                verdict=PASS,
                claim="zero-capital hedge gains stay above -x pathwise",
                statistic=-x,
                detail=(
                    "structural: the hedge value function is the survival probability, "
                    "which lies in [0, 1], so continuous-time gains never fall below -x"
                ),
            )
        )
        checks.append(
            check_hedge_convergence(
                T, hedge_grids, hedge_paths, config.seed, threads=threads
            )
        )
        hedged = sample_hedged_brownian(
            config.horizon, hedge_paths, config.seed, threads=threads, stream_offset=1 << 30
        )
        checks.append(
            check_q_loss_frequency(hedged.hedge_terminal - survival_hedge_capital(T), confidence)
        )
    else:
        try:
            if config.model is Model.COND_EXPECTATION:
                ens_s, _, _ = _probe_values(
                    config, rngmod.PURPOSE_ARBITRAGE, n, probe_times, threads
                )
                stats = survival_holding_terminals(ens_s, survival_asset_initial(ens_s))
            else:
                ens_s = sample_jump_paths(
                    config, n=n, purpose=rngmod.PURPOSE_ARBITRAGE, threads=threads
                )
                jump_superhedge_capital(config.law)
                stats = jump_superhedge_terminals(ens_s, config.law)
            checks.append(
                CheckResult(
                    name="superreplication_capital",
                    verdict=PASS if stats.x < 1.0 else FAIL,
                    claim="the survival claim is superreplicable from capital x < 1",
                    statistic=stats.x,
                    detail=f"strategy capital x = {stats.x:.6f}",
                )
            )
            admissible = check_admissibility(stats, alpha=stats.x)
            worst = float(np.min(stats.running_min)) - stats.x
            checks.append(
                CheckResult(
                    name="admissibility",
                    verdict=PASS if admissible else FAIL,
                    claim="zero-capital gains stay above -alpha with alpha = x",
                    statistic=worst,
                    detail=f"pathwise minimum of zero-capital gains: {worst:.9f} >= -x - tol",
                )
            )
            checks.append(certify_strong_arbitrage(stats, ens_s.weights))
            checks.append(check_q_loss_frequency(stats.v0h_terminal, confidence))
        except (ConfigurationError, IncompleteMarketError) as exc:
            reason = f"precondition failed: {exc}"
            for name, claim in (
                ("superreplication_capital", "the survival claim is superreplicable from capital x < 1"),
                ("admissibility", "zero-capital gains stay above -alpha with alpha = x"),
                ("strong_arbitrage", "from zero capital the strategy ends strictly positive on almost every reweighted path"),
                ("q_loss_frequency", "under the reference measure the strategy loses with positive probability"),
            ):
                checks.append(CheckResult(name=name, verdict=SKIP, claim=claim, detail=reason))

    ens_g = sample_paths(config, n=n, purpose=rngmod.PURPOSE_STRICT_LM, threads=threads)
    checks.append(check_strict_lm_gap(ens_g.y_terminal, ens_g.weights, confidence))
    checks.append(check_deflator_positivity(ens_g.y_terminal, ens_g.weights))

    ens_d, pt_d, yv_d = _probe_values(config, rngmod.PURPOSE_DEFLATED, n, probe_times, threads)
    if config.model is Model.COND_EXPECTATION:
        asset_vals = np.stack([survival_asset_at(ens_d, t) for t in pt_d])
        s0 = survival_asset_initial(ens_d)
    else:
        asset_vals = yv_d
        s0 = 1.0
    checks.append(
        check_deflated_supermartingale(
            pt_d, asset_vals, yv_d, ens_d.weights, s0, confidence, asset_label="asset_1"
        )
    )
    for extra in range(2, config.d + 1):
        # further assets: independent compensated unit-jump martingales with
        # zero strategy holdings, deflated by the same Y
        extra_cfg = MarketConfig(
            model=Model.COMPENSATED_POISSON,
            horizon=config.horizon,
            n_paths=n,
            seed=config.seed,
            lam=config.lam if config.lam is not None else 1.0 / T,
        )
        ens_x = sample_jump_paths(
            extra_cfg, n=n, purpose=rngmod.PURPOSE_DEFLATED, threads=threads,
            stream_offset=extra << 20,
        )
        xv = np.stack([ens_x.y_at(t) for t in pt_d])
        checks.append(
            check_deflated_supermartingale(
                pt_d, xv, yv_d, ens_d.weights, 1.0, confidence, asset_label=f"asset_{extra}"
            )
        )

    return CertificationReport(checks=tuple(checks), overall=_overall(checks))
