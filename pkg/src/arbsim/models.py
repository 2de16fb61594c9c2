"""Exact simulators for the four market constructions.

All models share the same skeleton: a nonnegative martingale Y started at 1
that either hits zero continuously or survives to the horizon.  Jump models
are simulated exactly from one exponential clock and one size draw per path;
the Brownian model uses an Euler walk whose zero hits are resampled from the
exact crossing probability of the Brownian bridge between grid points, so
its hit indicator and terminal law carry no discretization bias.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import rng as rngmod
from .types import (
    ConfigurationError,
    Estimate,
    EventPath,
    GridPath,
    JumpLaw,
    JUMP_MODELS,
    MarketConfig,
    Model,
    PathWeight,
    StopReason,
    TimeHorizon,
    z_value,
)

# stop_reason codes used inside ensembles
R_HIT_ZERO = 0
R_JUMPED = 1
R_HORIZON_END = 2

_REASONS = {
    R_HIT_ZERO: StopReason.HIT_ZERO,
    R_JUMPED: StopReason.JUMPED,
    R_HORIZON_END: StopReason.HORIZON_END,
}


# ---------------------------------------------------------------------------
# Ensembles: column-oriented path collections, exact per path
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpEnsemble:
    """Vectorized collection of single-jump trajectories.

    Each path is fully described by its first-jump time, the jump size and
    the stop record; values at arbitrary times are reconstructed in closed
    form, so nothing here is discretized.
    """

    lam: float
    T: float
    compensated: bool
    jump_time: np.ndarray
    jump_size: np.ndarray
    stop_time: np.ndarray
    stop_reason: np.ndarray
    y_terminal: np.ndarray

    @property
    def n(self) -> int:
        return self.y_terminal.size

    @property
    def weights(self) -> np.ndarray:
        """Per-path density of the target measure: the terminal value of Y."""
        return self.y_terminal

    def y_at(self, t: float) -> np.ndarray:
        """Exact value of Y at time t for every path (cadlag convention)."""
        if not 0 <= t <= self.T:
            raise ValueError(f"time {t} outside [0, {self.T}]")
        pre = 1.0 - self.lam * t if self.compensated else 1.0
        return np.where(t < self.stop_time, pre, self.y_terminal)

    def event_path(self, i: int) -> EventPath:
        """Materialize path i as an exact event description."""
        reason = _REASONS[int(self.stop_reason[i])]
        events = ()
        if reason is StopReason.JUMPED:
            events = ((float(self.jump_time[i]), float(self.jump_size[i])),)
        return EventPath(
            y0=1.0,
            drift_rate=-self.lam if self.compensated else 0.0,
            events=events,
            stop_time=float(self.stop_time[i]),
            stop_reason=reason,
            horizon=self.T,
        )


@dataclass(frozen=True, eq=False)
class BrownianEnsemble:
    """Summaries of bridge-corrected absorbed Brownian walks.

    Values are retained only at the requested probe times (always snapped to
    the simulation grid); per-path discrete delta-hedge results are attached
    when a hedge was supplied to the sampler.
    """

    T: float
    n_steps: int
    probe_times: tuple
    probe_values: Optional[np.ndarray]
    hit: np.ndarray
    hit_time: np.ndarray
    y_terminal: np.ndarray
    hedge_terminal: Optional[np.ndarray] = None
    hedge_min: Optional[np.ndarray] = None
    probe_hedge_values: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.y_terminal.size

    @property
    def weights(self) -> np.ndarray:
        return self.y_terminal

    @property
    def stop_reason(self) -> np.ndarray:
        return np.where(self.hit, R_HIT_ZERO, R_HORIZON_END).astype(np.int8)

    def y_at(self, t: float) -> np.ndarray:
        for j, pt in enumerate(self.probe_times):
            if abs(pt - t) <= 1e-12:
                return self.probe_values[j]
        raise ValueError(f"time {t} was not recorded; probe times are {self.probe_times}")


# ---------------------------------------------------------------------------
# Chunked sampling
# ---------------------------------------------------------------------------


def _jump_chunk(lam: float, law: JumpLaw, T: float, compensated: bool, rng, m: int):
    rho = rng.exponential(1.0 / lam, m)
    size = law.sample(rng, m)
    if compensated:
        tau = 1.0 / lam
        jumped = rho < tau
        stop_time = np.where(jumped, rho, tau)
        reason = np.where(jumped, R_JUMPED, R_HIT_ZERO).astype(np.int8)
        y_term = np.where(jumped, 1.0 - lam * rho + size, 0.0)
    else:
        jumped = rho <= T
        stop_time = np.minimum(rho, T)
        reason = np.where(jumped, R_JUMPED, R_HORIZON_END).astype(np.int8)
        y_term = np.where(jumped, 1.0 + size, 1.0)
    jump_time = np.where(jumped, rho, np.nan)
    jump_size = np.where(jumped, size, np.nan)
    return jump_time, jump_size, stop_time, reason, y_term


def sample_jump_paths(
    config: MarketConfig,
    n: Optional[int] = None,
    purpose: int = rngmod.PURPOSE_SIMULATE,
    threads: int = 1,
    stream_offset: int = 0,
) -> JumpEnsemble:
    """Simulate n single-jump paths under the pricing measure.

    Deterministic given (config.seed, purpose, stream_offset); independent of
    thread count.
    """
    model = config.effective_model
    if model not in JUMP_MODELS:
        raise ConfigurationError(f"{model.value} is not a jump model")
    lam = float(config.lam)
    law = config.law if model is Model.COMPOUND_POISSON else JumpLaw.degenerate()
    T = config.horizon.T
    n = config.n_paths if n is None else n

    def work(chunk_index, size):
        stream = rngmod.substream(config.seed, purpose, stream_offset + chunk_index)
        return _jump_chunk(lam, law, T, config.compensate_drift, stream, size)

    parts = rngmod.map_chunks(work, n, threads=threads)
    cols = [np.concatenate([p[j] for p in parts]) for j in range(5)]
    return JumpEnsemble(
        lam=lam,
        T=T,
        compensated=config.compensate_drift,
        jump_time=cols[0],
        jump_size=cols[1],
        stop_time=cols[2],
        stop_reason=cols[3],
        y_terminal=cols[4],
    )


def _brownian_chunk(
    T: float,
    n_steps: int,
    rng,
    m: int,
    probe_idx: Sequence[int],
    bridge_correction: bool,
    hedge_delta: Optional[Callable],
    hedge_capital: float,
):
    dt = T / n_steps
    sq = math.sqrt(dt)
    y = np.ones(m)
    alive = np.ones(m, dtype=bool)
    hit_time = np.full(m, np.nan)
    probes = {0: np.ones(m)} if 0 in probe_idx else {}
    probes_v = {}
    probe_set = set(probe_idx)
    v = v_min = None
    if hedge_delta is not None:
        v = np.full(m, hedge_capital)
        v_min = v.copy()
        if 0 in probe_set:
            probes_v[0] = v.copy()
    for k in range(n_steps):
        z = rng.standard_normal(m)
        u = rng.random(m)
        y_next = y + sq * z
        crossed = alive & (y_next <= 0.0)
        if bridge_correction:
            with np.errstate(over="ignore"):
                p_hit = np.exp(-2.0 * np.maximum(y, 0.0) * np.maximum(y_next, 0.0) / dt)
            bridged = alive & (y_next > 0.0) & (u < p_hit)
        else:
            bridged = np.zeros(m, dtype=bool)
        newly = crossed | bridged
        if hedge_delta is not None:
            h = np.where(alive, hedge_delta(k * dt, np.where(alive, y, 1.0)), 0.0)
            settled = np.where(newly, 0.0, y_next)
            v = v + np.where(alive, h * (settled - y), 0.0)
            v_min = np.minimum(v_min, v)
        y = np.where(alive, np.where(newly, 0.0, y_next), y)
        hit_time = np.where(newly, (k + 0.5) * dt, hit_time)
        alive &= ~newly
        if (k + 1) in probe_set:
            probes[k + 1] = y.copy()
            if v is not None:
                probes_v[k + 1] = v.copy()
    probe_values = np.stack([probes[i] for i in probe_idx]) if probe_idx else None
    probe_v = (
        np.stack([probes_v[i] for i in probe_idx]) if probe_idx and v is not None else None
    )
    return (~alive, hit_time, y, probe_values, v, v_min, probe_v)


def sample_brownian_paths(
    horizon: TimeHorizon,
    n: int,
    seed: int,
    purpose: int = rngmod.PURPOSE_SIMULATE,
    threads: int = 1,
    stream_offset: int = 0,
    probe_times: Sequence[float] = (),
    bridge_correction: bool = True,
    hedge_delta: Optional[Callable] = None,
    hedge_capital: float = 0.0,
) -> BrownianEnsemble:
    """Simulate absorbed Brownian walks started at 1.

    Probe times are snapped to the nearest grid point.  When ``hedge_delta``
    is given, a discrete self-financing hedge rebalanced at every grid point
    is tracked alongside each path, starting from ``hedge_capital``.
    """
    T = horizon.T
    n_steps = horizon.grid_points
    dt = T / n_steps
    probe_idx = sorted({int(round(t / dt)) for t in probe_times})
    if probe_idx and not 0 <= probe_idx[-1] <= n_steps:
        raise ValueError("probe times must lie in [0, T]")

    def work(chunk_index, size):
        stream = rngmod.substream(seed, purpose, stream_offset + chunk_index)
        return _brownian_chunk(
            T, n_steps, stream, size, probe_idx, bridge_correction, hedge_delta, hedge_capital
        )

    parts = rngmod.map_chunks(work, n, threads=threads)
    hit = np.concatenate([p[0] for p in parts])
    hit_time = np.concatenate([p[1] for p in parts])
    y_term = np.concatenate([p[2] for p in parts])
    probe_values = (
        np.concatenate([p[3] for p in parts], axis=1) if probe_idx else None
    )
    hedge_terminal = hedge_min = probe_hedge = None
    if hedge_delta is not None:
        hedge_terminal = np.concatenate([p[4] for p in parts])
        hedge_min = np.concatenate([p[5] for p in parts])
        if probe_idx:
            probe_hedge = np.concatenate([p[6] for p in parts], axis=1)
    return BrownianEnsemble(
        T=T,
        n_steps=n_steps,
        probe_times=tuple(i * dt for i in probe_idx),
        probe_values=probe_values,
        hit=hit,
        hit_time=hit_time,
        y_terminal=y_term,
        hedge_terminal=hedge_terminal,
        hedge_min=hedge_min,
        probe_hedge_values=probe_hedge,
    )


def sample_paths(
    config: MarketConfig,
    n: Optional[int] = None,
    purpose: int = rngmod.PURPOSE_SIMULATE,
    threads: int = 1,
    probe_times: Sequence[float] = (),
):
    """Sample an ensemble of Y paths for any configured model."""
    if config.effective_model in JUMP_MODELS:
        return sample_jump_paths(config, n=n, purpose=purpose, threads=threads)
    return sample_brownian_paths(
        config.horizon,
        config.n_paths if n is None else n,
        config.seed,
        purpose=purpose,
        threads=threads,
        probe_times=probe_times,
    )


# ---------------------------------------------------------------------------
# Single-path simulators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelOutput:
    """One simulated path of Y together with the traded assets and its weight."""

    y_path: object
    s_paths: tuple
    weight: PathWeight


def build_jump_path(
    lam: float,
    rho: float,
    size: float,
    horizon: TimeHorizon,
    compensated: bool = True,
) -> EventPath:
    """Exact single-jump path from its two underlying draws.

    ``rho`` is the exponential first-jump time, ``size`` the jump magnitude.
    The path stops at the earlier of the first jump and the zero hit of the
    compensator at 1/lam.
    """
    T = horizon.T
    if compensated:
        tau = 1.0 / lam
        if rho < tau:
            return EventPath(1.0, -lam, ((rho, size),), rho, StopReason.JUMPED, T)
        return EventPath(1.0, -lam, (), tau, StopReason.HIT_ZERO, T)
    if rho <= T:
        return EventPath(1.0, 0.0, ((rho, size),), rho, StopReason.JUMPED, T)
    return EventPath(1.0, 0.0, (), T, StopReason.HORIZON_END, T)


def simulate_compensated_poisson(lam: float, horizon: TimeHorizon, rng) -> ModelOutput:
    """Draw one compensated unit-jump path, stopped at its first jump or at zero."""
    _require_intensity(lam, horizon)
    rho = float(rng.exponential(1.0 / lam))
    path = build_jump_path(lam, rho, 1.0, horizon)
    return ModelOutput(y_path=path, s_paths=(path,), weight=PathWeight(path.terminal_value))


def simulate_compound_poisson(lam: float, law: JumpLaw, horizon: TimeHorizon, rng) -> ModelOutput:
    """Draw one compensated compound path: same clock race, law-distributed jump."""
    _require_intensity(lam, horizon)
    rho = float(rng.exponential(1.0 / lam))
    size = float(law.sample(rng, 1)[0])
    path = build_jump_path(lam, rho, size, horizon)
    return ModelOutput(y_path=path, s_paths=(path,), weight=PathWeight(path.terminal_value))


def simulate_stopped_brownian(
    horizon: TimeHorizon, rng, bridge_correction: bool = True
) -> ModelOutput:
    """Draw one absorbed Brownian walk started at 1 on the configured grid."""
    n = horizon.grid_points
    T = horizon.T
    dt = T / n
    sq = math.sqrt(dt)
    z = rng.standard_normal(n)
    u = rng.random(n)
    raw = np.empty(n + 1)
    raw[0] = 1.0
    raw[1:] = 1.0 + np.cumsum(sq * z)
    prev = raw[:-1]
    nxt = raw[1:]
    hits = nxt <= 0.0
    if bridge_correction:
        with np.errstate(over="ignore"):
            p = np.exp(-2.0 * np.maximum(prev, 0.0) * np.maximum(nxt, 0.0) / dt)
        hits = hits | ((prev > 0.0) & (nxt > 0.0) & (u < p))
    values = raw.copy()
    hit_zero = bool(hits.any())
    hit_time = None
    if hit_zero:
        first = int(np.argmax(hits))
        values[first + 1 :] = 0.0
        hit_time = (first + 0.5) * dt
    times = np.linspace(0.0, T, n + 1)
    path = GridPath(times=times, values=values, hit_zero=hit_zero, hit_time=hit_time)
    return ModelOutput(y_path=path, s_paths=(path,), weight=PathWeight(path.terminal_value))


def _require_intensity(lam: float, horizon: TimeHorizon):
    if lam < 1.0 / horizon.T:
        raise ConfigurationError(
            f"lambda >= 1/T required so the path can reach zero before the horizon "
            f"(got lambda={lam}, 1/T={1.0 / horizon.T}); otherwise the zero hit has probability 0"
        )


# ---------------------------------------------------------------------------
# Conditional survival-probability asset
# ---------------------------------------------------------------------------


def survival_value_jump(lam: float, t, stop_time, terminal):
    """Conditional probability that a jump-model path survives to the horizon.

    Before stopping this equals the chance that the jump clock beats the
    deterministic zero hit at 1/lam, ``1 - exp(-(1 - lam*t))``; once the path
    stops the indicator of survival is revealed.
    """
    t = np.asarray(t, dtype=float)
    running = 1.0 - np.exp(-(1.0 - lam * t))
    return np.where(t < stop_time, running, (np.asarray(terminal) > 0.0).astype(float))


def survival_value_brownian(t: float, T: float, y, hit, hit_time):
    """Survival probability of the absorbed Brownian walk given its state at t."""
    stopped = hit & (np.asarray(hit_time) <= t)
    if t >= T:
        live = (np.asarray(y) > 0.0).astype(float)
    else:
        live = 2.0 * ndtr(np.asarray(y) / math.sqrt(T - t)) - 1.0
    return np.where(stopped, 0.0, live)


class SurvivalAssetPath:
    """Closed-form price path of the claim paying 1 when Y survives.

    Wraps a base Y path; values are the conditional survival probability and
    become the revealed indicator after the base path stops.
    """

    def __init__(self, base: ModelOutput, lam: Optional[float] = None):
        self._base = base
        self._lam = lam
        y = base.y_path
        if isinstance(y, EventPath):
            if lam is None:
                raise ValueError("jump base needs its intensity")
            self._kind = "jump"
            self.horizon = y.horizon
        elif isinstance(y, GridPath):
            self._kind = "brownian"
            self.horizon = float(y.times[-1])
        else:
            raise ConfigurationError("unsupported base path for the survival asset")

    @property
    def initial_value(self) -> float:
        if self._kind == "jump":
            return 1.0 - math.exp(-1.0)
        return float(2.0 * ndtr(1.0 / math.sqrt(self.horizon)) - 1.0)

    def value_at(self, t: float) -> float:
        if not 0 <= t <= self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        y = self._base.y_path
        if self._kind == "jump":
            return float(
                survival_value_jump(self._lam, t, y.stop_time, y.terminal_value)
            )
        idx = int(round(t / (y.times[1] - y.times[0])))
        return float(
            survival_value_brownian(
                y.times[idx],
                self.horizon,
                y.values[idx],
                np.asarray(y.hit_zero),
                np.asarray(y.hit_time if y.hit_time is not None else np.inf),
            )
        )

    @property
    def terminal_value(self) -> float:
        return self.value_at(self.horizon)


def simulate_cond_expectation_asset(base: ModelOutput, lam: Optional[float] = None) -> ModelOutput:
    """Replace the traded asset by the survival-probability process of the base Y.

    The base must come from one of the three concrete simulators; the asset
    is a deterministic functional of the base path, so no fresh randomness is
    consumed.
    """
    asset = SurvivalAssetPath(base, lam=lam)
    return ModelOutput(y_path=base.y_path, s_paths=(asset,), weight=base.weight)


def survival_asset_at(ensemble, t: float) -> np.ndarray:
    """Vectorized survival-asset values for a whole ensemble."""
    if isinstance(ensemble, JumpEnsemble):
        return survival_value_jump(ensemble.lam, t, ensemble.stop_time, ensemble.y_terminal)
    y = ensemble.y_at(t)
    return survival_value_brownian(t, ensemble.T, y, ensemble.hit, ensemble.hit_time)


def survival_asset_initial(ensemble) -> float:
    if isinstance(ensemble, JumpEnsemble):
        return 1.0 - math.exp(-1.0)
    return float(2.0 * ndtr(1.0 / math.sqrt(ensemble.T)) - 1.0)


# ---------------------------------------------------------------------------
# Admission check: positive but continuous zero-hitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class A0Result:
    """Outcome of the zero-hitting admission check."""

    passed: bool
    frequency: Estimate
    clauses: tuple  # (name, passed, detail)

    @property
    def failed_clauses(self) -> tuple:
        return tuple(name for name, ok, _ in self.clauses if not ok)


def check_assumption_A0(
    config: MarketConfig,
    n_probe: int = 100_000,
    threads: int = 1,
    confidence: float = 0.99,
) -> A0Result:
    """Verify that Y hits zero with positive probability, continuously, and
    not almost surely.

    Clause one and three are statistical (confidence bounds on the zero-hit
    frequency); the continuity clause is structural for jump models, where a
    zero hit can only happen through the drift reaching zero exactly.
    """
    ens = sample_paths(config, n=n_probe, purpose=rngmod.PURPOSE_A0, threads=threads)
    zero_hit = ens.y_terminal == 0.0
    p = float(zero_hit.mean())
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n_probe)
    freq = Estimate(mean=p, std_error=se, n=n_probe, confidence=confidence)
    z = z_value(confidence)
    lo, hi = p - z * se, p + z * se

    clauses = []
    clauses.append(
        (
            "zero_hit_probability_positive",
            lo > 0.0,
            f"frequency {p:.6f}, {confidence:.0%} CI lower bound {lo:.6f} must be > 0",
        )
    )
    if isinstance(ens, JumpEnsemble):
        hz = ens.stop_reason == R_HIT_ZERO
        drift_reaches_zero = np.abs(1.0 - ens.lam * ens.stop_time[hz]) <= 1e-12
        no_jump_at_hit = np.isnan(ens.jump_time[hz])
        ok = bool(drift_reaches_zero.all() and no_jump_at_hit.all())
        detail = "every zero hit is reached by the drift alone, with no jump at the hitting time"
    else:
        ok = bool((ens.y_terminal[ens.hit] == 0.0).all())
        detail = "absorbed diffusion: paths are set to zero at the declared crossing"
    clauses.append(("hits_are_continuous", ok, detail))
    clauses.append(
        (
            "zero_hit_probability_below_one",
            hi < 1.0,
            f"{confidence:.0%} CI upper bound {hi:.6f} must be < 1",
        )
    )
    return A0Result(passed=all(ok for _, ok, _ in clauses), frequency=freq, clauses=tuple(clauses))
