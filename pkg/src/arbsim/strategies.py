"""Superreplicating strategies and exact value-process integration.

The jump-model strategy holds ``exp(-(1 - lam*t)/f_max) / f_min`` units of
the first asset until the path stops.  Its value process is available in
closed form: the drift leg integrates explicitly and the jump leg is a single
product, so the superreplication inequality can be checked pathwise with no
quadrature error.  The diffusion model is hedged by the delta of the survival
probability instead, rebalanced on the simulation grid.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from . import rng as rngmod
from .models import BrownianEnsemble, JumpEnsemble, sample_brownian_paths
from .types import (
    ConfigurationError,
    EventPath,
    IncompleteMarketError,
    JumpLaw,
    JUMP_MODELS,
    MarketConfig,
    Model,
    PathState,
    StrategySpec,
    TimeHorizon,
)

ADMISSIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class ValueProcessRecord:
    """Value process of one strategy along one path, evaluated exactly.

    ``values`` holds (time, value) pairs at the path's event times; between
    those times the value process is continuous and monotone for integrands
    of constant sign, so ``running_minimum`` is the true pathwise infimum.
    """

    x: float
    values: tuple
    terminal_value: float
    running_minimum: float
    quadrature_fallback: bool = False


@dataclass(frozen=True, eq=False)
class StrategyPathStats:
    """Per-path strategy outcomes for a whole ensemble."""

    x: float
    v_terminal: np.ndarray
    v0h_terminal: np.ndarray
    running_min: np.ndarray
    label: str


# ---------------------------------------------------------------------------
# Jump-model superhedge
# ---------------------------------------------------------------------------


def jump_superhedge_integrand(t: float, lam: float, law: JumpLaw, stopped: bool) -> float:
    """Holding in the first asset at time t, zero once the path has stopped."""
    if not 0 <= t:
        raise ValueError(f"time {t} must be nonnegative")
    if stopped:
        return 0.0
    return math.exp(-(1.0 - lam * t) / law.f_max) / law.f_min


def jump_superhedge_capital(law: JumpLaw) -> float:
    """Initial capital from which the jump strategy dominates the survival claim.

    ``x = (f_max/f_min) * (1 - exp(-1/f_max))``.  Raises when x >= 1: the
    construction needs the claim to be superreplicable strictly below par, and
    this size law does not satisfy that capital bound.
    """
    x = (law.f_max / law.f_min) * (1.0 - math.exp(-1.0 / law.f_max))
    if x >= 1.0:
        raise ConfigurationError(
            f"initial capital x = {x:.6f} is not below 1 for size bounds "
            f"[{law.f_min}, {law.f_max}]; the strong-arbitrage construction requires "
            f"a superreplication capital x < 1"
        )
    return x


def jump_superhedge_strategy(lam: float, law: JumpLaw) -> StrategySpec:
    """Bundle the jump integrand, its exact time integral, and capital x."""
    x = jump_superhedge_capital(law)

    def integrand(t: float, state: PathState) -> float:
        return jump_superhedge_integrand(t, lam, law, state.stopped)

    def drift_integral(s: float) -> float:
        # int_0^s exp(-(1 - lam*t)/f_max) dt, in closed form
        w0 = math.exp(-1.0 / law.f_max)
        ws = math.exp(-(1.0 - lam * s) / law.f_max)
        return law.f_max / (lam * law.f_min) * (ws - w0)

    return StrategySpec(
        integrand=integrand,
        x=x,
        alpha=x,
        drift_integral=drift_integral,
        label="jump_superhedge",
    )


def integrate_value_process_jump(path: EventPath, strategy: StrategySpec) -> ValueProcessRecord:
    """Evaluate x + integral of H dY along a single-jump path.

    Uses the strategy's closed-form time integral when available; otherwise
    falls back to adaptive quadrature at 1e-10 tolerance and flags the record.
    The running minimum assumes the integrand keeps one sign between events.
    """
    s = min(path.stop_time, path.horizon)
    fallback = False
    if strategy.drift_integral is not None:
        time_integral = strategy.drift_integral(s)
    else:
        def h(t):
            return strategy.integrand(
                t, PathState(t=t, stopped=False, y_left=path.y0 + path.drift_rate * t)
            )

        time_integral, _ = integrate.quad(h, 0.0, s, epsabs=1e-10, limit=200)
        fallback = True
    v_pre = strategy.x + path.drift_rate * time_integral
    terminal = v_pre
    for et, jump in path.events:
        if et == path.stop_time:
            y_left = path.y0 + path.drift_rate * et
            h_at = strategy.integrand(et, PathState(t=et, stopped=False, y_left=y_left))
            terminal = v_pre + h_at * jump
    return ValueProcessRecord(
        x=strategy.x,
        values=((0.0, strategy.x), (s, v_pre), (path.horizon, terminal)),
        terminal_value=terminal,
        running_minimum=min(strategy.x, v_pre, terminal),
        quadrature_fallback=fallback,
    )


def jump_superhedge_terminals(ens: JumpEnsemble, law: JumpLaw) -> StrategyPathStats:
    """Closed-form strategy outcomes for every path of a jump ensemble.

    On a zero-hit path the drift leg burns the capital to exactly zero; on a
    jumping path the jump leg pushes the terminal value to at least one.
    """
    if not ens.compensated:
        raise ConfigurationError("the superhedge accounting requires the compensated construction")
    x = jump_superhedge_capital(law)
    coef = law.f_max / law.f_min
    w0 = math.exp(-1.0 / law.f_max)
    jumped = ens.stop_reason == 1
    ws = np.where(jumped, np.exp(-(1.0 - ens.lam * ens.stop_time) / law.f_max), 1.0)
    v_pre = x - coef * (ws - w0)
    v_term = v_pre + np.where(jumped, (ws / law.f_min) * np.where(jumped, ens.jump_size, 0.0), 0.0)
    running_min = np.minimum(v_pre, v_term)
    return StrategyPathStats(
        x=x,
        v_terminal=v_term,
        v0h_terminal=v_term - x,
        running_min=running_min,
        label="jump_superhedge",
    )


def survival_holding_terminals(ens, initial_value: float) -> StrategyPathStats:
    """Outcomes of buying and holding one unit of the survival-probability asset.

    The asset's terminal value is the survival indicator itself, so the hold
    replicates the claim exactly; its price never goes negative, which bounds
    the zero-capital value process below by -x pathwise.
    """
    survivors = ens.y_terminal > 0.0
    v_term = survivors.astype(float)
    if isinstance(ens, JumpEnsemble):
        # price decays until the stop, then jumps to the revealed indicator:
        # the infimum is the left limit at the stop time (zero on hit paths)
        jumped = ens.stop_reason == 1
        running_min = np.where(jumped, 1.0 - np.exp(-(1.0 - ens.lam * ens.stop_time)), 0.0)
    else:
        # the price is a nonnegative process, so zero is a valid pathwise
        # lower bound (exact on hit paths)
        running_min = np.zeros_like(v_term)
    return StrategyPathStats(
        x=initial_value,
        v_terminal=v_term,
        v0h_terminal=v_term - initial_value,
        running_min=running_min,
        label="survival_asset_hold",
    )


def check_admissibility(record, alpha: float) -> bool:
    """True iff the zero-capital value process stays above -alpha.

    Accepts a single ValueProcessRecord or ensemble StrategyPathStats; the
    comparison allows ADMISSIBILITY_TOL of floating-point slack.
    """
    if isinstance(record, ValueProcessRecord):
        worst = record.running_minimum - record.x
    else:
        worst = float(np.min(record.running_min)) - record.x
    return worst >= -alpha - ADMISSIBILITY_TOL


# ---------------------------------------------------------------------------
# Diffusion-model delta hedge
# ---------------------------------------------------------------------------


def survival_claim_price(t: float, y, T: float):
    """Price of the survival claim for an absorbed unit-drift-free diffusion."""
    if t >= T:
        return (np.asarray(y) > 0.0).astype(float)
    return 2.0 * ndtr(np.asarray(y) / math.sqrt(T - t)) - 1.0


def survival_hedge_delta(t: float, y, T: float):
    """Spatial derivative of the survival price: the grid-rebalanced holding."""
    if t >= T:
        raise ValueError(f"hedge is defined for t < T, got t={t}, T={T}")
    rem = math.sqrt(T - t)
    yy = np.asarray(y, dtype=float) / rem
    return 2.0 * np.exp(-0.5 * yy * yy) / (math.sqrt(2.0 * math.pi) * rem)


def survival_hedge_capital(T: float) -> float:
    return float(2.0 * ndtr(1.0 / math.sqrt(T)) - 1.0)


def sample_hedged_brownian(
    horizon: TimeHorizon,
    n: int,
    seed: int,
    threads: int = 1,
    stream_offset: int = 0,
    probe_times: Sequence[float] = (),
) -> BrownianEnsemble:
    """Brownian ensemble with the survival delta hedge tracked along each path."""
    T = horizon.T
    return sample_brownian_paths(
        horizon,
        n,
        seed,
        purpose=rngmod.PURPOSE_HEDGE,
        threads=threads,
        stream_offset=stream_offset,
        probe_times=probe_times,
        hedge_delta=lambda t, y: survival_hedge_delta(t, y, T),
        hedge_capital=survival_hedge_capital(T),
    )


def delta_hedge_study(
    T: float,
    grids: Sequence[int],
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> list:
    """Terminal replication error RMS of the delta hedge at each grid size."""
    out = []
    for gi, steps in enumerate(grids):
        ens = sample_hedged_brownian(
            TimeHorizon(T=T, grid_points=int(steps)),
            n_paths,
            seed,
            threads=threads,
            stream_offset=gi << 20,
        )
        err = ens.hedge_terminal - (ens.y_terminal > 0.0)
        out.append((int(steps), float(np.sqrt(np.mean(err * err)))))
    return out


# ---------------------------------------------------------------------------
# Superreplication price
# ---------------------------------------------------------------------------


def superreplication_price_complete(config: MarketConfig) -> float:
    """Closed-form minimal superreplication price of the survival claim.

    Valid when every claim is replicable, so the supremum over consistent
    pricing measures collapses to a single expectation.  A compound model
    with more than one jump size is not complete in that sense and raises.
    """
    if not config.compensate_drift:
        raise ConfigurationError("the price is defined for the compensated construction")
    model = config.model
    if model is Model.COMPOUND_POISSON and not config.law.is_degenerate:
        raise IncompleteMarketError(
            "multi-size jump laws break replicability of the survival claim; "
            "use the Monte Carlo bounds reported by the price command instead"
        )
    if model is Model.STOPPED_BROWNIAN or (
        model is Model.COND_EXPECTATION and config.effective_model is Model.STOPPED_BROWNIAN
    ):
        return survival_hedge_capital(config.horizon.T)
    if config.effective_model in JUMP_MODELS:
        # the race between the jump clock and the deterministic zero hit at
        # 1/lam always gives survival probability 1 - exp(-1)
        return 1.0 - math.exp(-1.0)
    raise ConfigurationError(f"unsupported model {model.value}")
