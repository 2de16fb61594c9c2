"""Core value objects shared by the simulators, measure change, strategies and verifiers.

Everything here is immutable after construction and safe to share between
worker threads.
"""

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtri


class ConfigurationError(ValueError):
    """A model or experiment configuration violates a named constraint."""


class IncompleteMarketError(ValueError):
    """Raised when a closed-form price requires a complete market and the
    configured model is not complete."""


class StopReason(enum.Enum):
    HIT_ZERO = "hit_zero"
    JUMPED = "jumped"
    HORIZON_END = "horizon_end"


class Model(enum.Enum):
    COND_EXPECTATION = "cond_expectation"
    COMPENSATED_POISSON = "compensated_poisson"
    COMPOUND_POISSON = "compound_poisson"
    STOPPED_BROWNIAN = "stopped_brownian"


JUMP_MODELS = (Model.COMPENSATED_POISSON, Model.COMPOUND_POISSON)


@dataclass(frozen=True)
class TimeHorizon:
    """Finite trading horizon plus the grid resolution used by diffusion models.

    Attributes:
        T: horizon length, strictly positive and finite.
        grid_points: number of Euler steps for grid-based models (>= 2).
    """

    T: float
    grid_points: int = 1000

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigurationError(f"horizon T must be positive and finite, got {self.T}")
        if self.grid_points < 2:
            raise ConfigurationError(f"grid_points must be >= 2, got {self.grid_points}")


@dataclass(frozen=True)
class JumpLaw:
    """Finitely supported jump-size distribution with unit mean.

    Sizes live in [f_min, f_max] with 0 < f_min <= 1 <= f_max and the
    expectation must equal one (to within 1e-12), so that subtracting a
    drift of ``intensity * t`` compensates the jumps exactly.
    """

    atoms: tuple
    f_min: float = 0.0
    f_max: float = 0.0

    def __post_init__(self):
        atoms = tuple((float(s), float(p)) for s, p in self.atoms)
        if not atoms:
            raise ConfigurationError("jump law needs at least one atom")
        sizes = [s for s, _ in atoms]
        probs = [p for _, p in atoms]
        f_min = self.f_min if self.f_min > 0 else min(sizes)
        f_max = self.f_max if self.f_max > 0 else max(sizes)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "f_min", float(f_min))
        object.__setattr__(self, "f_max", float(f_max))
        if not all(0 < p <= 1 for p in probs):
            raise ConfigurationError("atom probabilities must lie in (0, 1]")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigurationError(f"atom probabilities must sum to 1, got {sum(probs)!r}")
        mean = sum(s * p for s, p in atoms)
        if abs(mean - 1.0) > 1e-12:
            raise ConfigurationError(f"jump sizes must have expectation 1, got {mean!r}")
        if not (0 < self.f_min <= 1 <= self.f_max):
            raise ConfigurationError(
                f"size bounds must satisfy 0 < f_min <= 1 <= f_max, got [{self.f_min}, {self.f_max}]"
            )
        if min(sizes) < self.f_min - 1e-15 or max(sizes) > self.f_max + 1e-15:
            raise ConfigurationError("atom sizes must lie within [f_min, f_max]")

    @classmethod
    def degenerate(cls) -> "JumpLaw":
        """Unit jumps with probability one."""
        return cls(atoms=((1.0, 1.0),))

    @classmethod
    def two_point(cls, low: float, high: float, p_low: float = 0.5) -> "JumpLaw":
        return cls(atoms=((low, p_low), (high, 1.0 - p_low)))

    @property
    def is_degenerate(self) -> bool:
        return len(self.atoms) == 1 and self.atoms[0][0] == 1.0

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.atoms])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.is_degenerate:
            return np.ones(n)
        return rng.choice(self.sizes, size=n, p=self.probabilities)


@dataclass(frozen=True)
class EventPath:
    """Exact piecewise description of a jump-model trajectory.

    The value at time t is ``y0 + drift_rate * min(t, stop_time)`` plus all
    jumps that occurred at or before t.  The path is constant from
    ``stop_time`` onward, and a path that stops by hitting zero does so with
    the drift alone (no jump at the hitting time).
    """

    y0: float
    drift_rate: float
    events: tuple
    stop_time: float
    stop_reason: StopReason
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "events", tuple((float(t), float(j)) for t, j in self.events))
        if self.y0 < 0:
            raise ValueError("initial value must be nonnegative")
        if self.stop_time < 0:
            raise ValueError("stop time must be nonnegative")
        for t, _ in self.events:
            if not 0 <= t <= self.horizon:
                raise ValueError("event times must lie in [0, horizon]")
            if t > self.stop_time:
                raise ValueError("no events may occur after the stop time")
        if self.stop_reason is StopReason.HIT_ZERO:
            if any(t == self.stop_time for t, _ in self.events):
                raise ValueError("a zero hit must be continuous: no jump at the hitting time")
            at_stop = self.y0 + self.drift_rate * self.stop_time
            at_stop += sum(j for t, j in self.events if t <= self.stop_time)
            scale = max(1.0, abs(self.drift_rate * self.stop_time))
            if abs(at_stop) > 1e-9 * scale:
                raise ValueError(
                    f"a zero hit requires the value to reach zero at the stop time, got {at_stop}"
                )

    @property
    def terminal_value(self) -> float:
        return reconstruct_value(self, self.horizon)


@dataclass(frozen=True, eq=False)
class GridPath:
    """Discretized diffusion trajectory with a bridge-corrected zero-hit record.

    ``hit_time`` is placed at the midpoint of the interval in which the hit
    was declared; values are zero from the first grid index at or past it.
    """

    times: np.ndarray
    values: np.ndarray
    hit_zero: bool
    hit_time: Optional[float]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape:
            raise ValueError("times and values must have equal length")
        if times[0] != 0.0:
            raise ValueError("grid must start at time 0")
        if values[0] != 1.0:
            raise ValueError("grid paths start at 1")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        if self.hit_zero:
            if self.hit_time is None or not (0 <= self.hit_time <= times[-1]):
                raise ValueError("a zero hit requires a hit_time inside [0, T]")
            first = int(np.searchsorted(times, self.hit_time))
            if np.any(values[first:] != 0.0):
                raise ValueError("an absorbed path must stay at zero after its hit time")

    @property
    def terminal_value(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class PathWeight:
    """Radon-Nikodym weight attached to one trajectory: the terminal value of Y."""

    w: float

    def __post_init__(self):
        if not (self.w >= 0):
            raise ValueError(f"path weight must be nonnegative, got {self.w}")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with its standard error.

    The confidence interval is ``mean +/- z(confidence) * std_error`` where z
    is the two-sided standard normal quantile.
    """

    mean: float
    std_error: float
    n: int
    confidence: float = 0.99

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("standard error must be nonnegative")
        if self.n < 1:
            raise ValueError("sample count must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")

    def half_width(self) -> float:
        return z_value(self.confidence) * self.std_error

    def interval(self, clamp: Optional[tuple] = None) -> tuple:
        lo = self.mean - self.half_width()
        hi = self.mean + self.half_width()
        if clamp is not None:
            lo = max(lo, clamp[0])
            hi = min(hi, clamp[1])
        return (lo, hi)


@dataclass(frozen=True)
class PathState:
    """What a predictable integrand may see at time t: left limits only."""

    t: float
    stopped: bool
    y_left: float


@dataclass(frozen=True)
class StrategySpec:
    """A predictable integrand plus initial capital and admissibility bound.

    ``integrand(t, state)`` returns the holding in the first asset; holdings
    in any further assets are zero.  ``drift_integral(s)``, when provided,
    must equal the exact time integral of the integrand over [0, s] on an
    unstopped path, and lets the value process be evaluated without
    quadrature.
    """

    integrand: Callable[[float, PathState], float]
    x: float
    alpha: float
    drift_integral: Optional[Callable[[float], float]] = None
    label: str = "strategy"

    def __post_init__(self):
        if not 0 <= self.x < 1:
            raise ConfigurationError(f"initial capital must lie in [0, 1), got {self.x}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ConfigurationError(f"admissibility bound must be finite and nonnegative, got {self.alpha}")


@dataclass(frozen=True)
class MarketConfig:
    """Full specification of one simulated market.

    ``lam`` is the jump intensity (jump models only) and must satisfy
    ``lam >= 1/T`` so the compensator can reach zero inside the horizon.
    ``compensate_drift=False`` drops the compensator and exists purely as a
    negative control for the certification battery.
    """

    model: Model
    horizon: TimeHorizon
    n_paths: int
    seed: int
    lam: Optional[float] = None
    jump_law: Optional[JumpLaw] = None
    d: int = 1
    compensate_drift: bool = True
    base_model: Optional[Model] = None

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigurationError("n_paths must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.d < 1:
            raise ConfigurationError("d must be a positive asset count")
        base = self.effective_model
        if base in JUMP_MODELS:
            if self.lam is None or self.lam <= 0:
                raise ConfigurationError("jump models require a positive intensity lambda")
            if self.compensate_drift and self.lam < 1.0 / self.horizon.T:
                raise ConfigurationError(
                    f"lambda >= 1/T required so the compensated path can reach zero "
                    f"before the horizon (got lambda={self.lam}, 1/T={1.0 / self.horizon.T})"
                )
            if base is Model.COMPOUND_POISSON and self.jump_law is None:
                raise ConfigurationError("compound model requires a jump law")
        if self.model is Model.COND_EXPECTATION and self.base_model is Model.COND_EXPECTATION:
            raise ConfigurationError("conditional-expectation asset needs a concrete base model")

    @property
    def effective_model(self) -> Model:
        """The model that actually generates Y paths."""
        if self.model is Model.COND_EXPECTATION:
            return self.base_model or Model.COMPENSATED_POISSON
        return self.model

    @property
    def law(self) -> JumpLaw:
        return self.jump_law if self.jump_law is not None else JumpLaw.degenerate()


def z_value(confidence: float, two_sided: bool = True) -> float:
    """Standard normal quantile for the given confidence level."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if two_sided:
        return float(ndtri(0.5 + confidence / 2.0))
    return float(ndtri(confidence))


def mean_estimate(values: Sequence[float], confidence: float = 0.99) -> Estimate:
    """Sample mean with standard error sd/sqrt(n)."""
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        raise ValueError("cannot estimate from an empty sample")
    se = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean=float(arr.mean()), std_error=se, n=int(n), confidence=confidence)


def reconstruct_value(path: EventPath, t: float) -> float:
    """Evaluate the path value at time t from its event description.

    Exact: a path that stopped by hitting zero reports 0.0 identically from
    its stop time onward, and a stopped path is constant afterwards.
    """
    if not 0 <= t <= path.horizon:
        raise ValueError(f"time {t} outside [0, {path.horizon}]")
    if t >= path.stop_time:
        if path.stop_reason is StopReason.HIT_ZERO:
            return 0.0
        t = path.stop_time
    v = path.y0 + path.drift_rate * t
    for et, jump in path.events:
        if et <= t:
            v += jump
    return v


def ci_contains(est: Estimate, target: float) -> bool:
    """True iff target lies in the estimate's confidence interval."""
    return abs(target - est.mean) <= est.half_width()
