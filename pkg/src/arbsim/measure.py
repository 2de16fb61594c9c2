"""Reweighting by terminal path values: expectations under the target measure.

The target measure has density Y(T) with respect to the sampling measure, so
any expectation under it is estimated by the plain product mean of
``weight * functional`` over sampled paths.  Paths whose Y hits zero carry
weight zero, which is exactly what makes the two measures non-equivalent.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .models import JumpEnsemble, _jump_chunk
from .types import (
    ConfigurationError,
    Estimate,
    JumpLaw,
    JUMP_MODELS,
    MarketConfig,
    Model,
    mean_estimate,
)


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Functional values paired with their path weights."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        if values.shape != weights.shape:
            raise ValueError("values and weights must have equal length")
        if values.size == 0:
            raise ValueError("weighted sample must be nonempty")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")

    @property
    def n(self) -> int:
        return self.values.size


def p_expectation(sample: WeightedSample, confidence: float = 0.99) -> Estimate:
    """Estimate the target-measure expectation of the sampled functional.

    Uses the unnormalized product mean; the weights have known mean one, so
    no ratio correction is applied and the standard error comes straight from
    the sample variance of the products.
    """
    return mean_estimate(sample.weights * sample.values, confidence=confidence)


def p_probability(sample: WeightedSample, confidence: float = 0.99) -> Estimate:
    """p_expectation specialized to indicator functionals.

    The returned estimate is a probability; confidence intervals should be
    read clamped to [0, 1] (``Estimate.interval(clamp=(0, 1))``).
    """
    vals = sample.values
    if not np.all((vals == 0.0) | (vals == 1.0)):
        raise ValueError("p_probability expects {0,1}-valued functionals")
    return p_expectation(sample, confidence=confidence)


@dataclass(frozen=True, eq=False)
class DirectPSample:
    """Paths drawn directly from the target law by rejection, plus bookkeeping.

    ``n_accepted`` counts every acceptance among the proposals, before the
    returned sample was truncated to the requested size.
    """

    paths: JumpEnsemble
    n_proposed: int
    n_accepted: int

    @property
    def acceptance_rate(self) -> Estimate:
        p = self.n_accepted / self.n_proposed
        se = math.sqrt(p * (1.0 - p) / self.n_proposed)
        return Estimate(mean=p, std_error=se, n=self.n_proposed)


def sample_under_p_direct(config: MarketConfig, n: int) -> DirectPSample:
    """Draw n jump paths from the target measure by acceptance-rejection.

    Proposals come from the sampling measure; a proposal is accepted with
    probability Y(T) / (1 + f_max), the terminal value against its almost
    sure upper bound.  Only jump models qualify (the weight must be bounded).
    """
    model = config.effective_model
    if model not in JUMP_MODELS:
        raise ConfigurationError(
            f"direct target-measure sampling supports jump models only, got {model.value}"
        )
    if not config.compensate_drift:
        raise ConfigurationError("direct target-measure sampling requires the compensated model")
    lam = float(config.lam)
    law = config.law if model is Model.COMPOUND_POISSON else JumpLaw.degenerate()
    bound = 1.0 + law.f_max

    kept = []
    accepted = 0
    proposed = 0
    chunk_index = 0
    while accepted < n:
        stream = rngmod.substream(config.seed, rngmod.PURPOSE_REJECTION, chunk_index)
        cols = _jump_chunk(lam, law, config.horizon.T, True, stream, rngmod.CHUNK_SIZE)
        u = stream.random(rngmod.CHUNK_SIZE)
        keep = u < cols[4] / bound
        kept.append(tuple(c[keep] for c in cols))
        accepted += int(keep.sum())
        proposed += rngmod.CHUNK_SIZE
        chunk_index += 1
    cols = [np.concatenate([part[j] for part in kept])[:n] for j in range(5)]
    ens = JumpEnsemble(
        lam=lam,
        T=config.horizon.T,
        compensated=True,
        jump_time=cols[0],
        jump_size=cols[1],
        stop_time=cols[2],
        stop_reason=cols[3],
        y_terminal=cols[4],
    )
    return DirectPSample(paths=ens, n_proposed=proposed, n_accepted=accepted)


def jump_time_cdf_p(lam: float, u) -> np.ndarray:
    """Distribution function of the first jump time under the target measure.

    Closed form ``1 - exp(-lam*u) * (1 - lam*u)`` on [0, 1/lam]: the
    exponential proposal density times the terminal weight 2 - lam*t,
    integrated.  Independent of the jump-size law because sizes have mean one.
    """
    u = np.asarray(u, dtype=float)
    capped = np.minimum(u * lam, 1.0)
    return 1.0 - np.exp(-capped) * (1.0 - capped)
