"""Core value objects: validation, reconstruction exactness, estimates."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbsim import (
    ConfigurationError,
    Estimate,
    EventPath,
    JumpLaw,
    MarketConfig,
    Model,
    PathWeight,
    StopReason,
    StrategySpec,
    TimeHorizon,
    build_jump_path,
    ci_contains,
    mean_estimate,
    reconstruct_value,
    sample_jump_paths,
    z_value,
)


class TestTimeHorizon:
    def test_valid(self):
        hz = TimeHorizon(T=2.5, grid_points=100)
        assert hz.T == 2.5
        assert hz.grid_points == 100

    @pytest.mark.parametrize("T", [0.0, -1.0, math.inf, math.nan])
    def test_bad_horizon_rejected(self, T):
        with pytest.raises(ConfigurationError):
            TimeHorizon(T=T)

    def test_grid_points_minimum(self):
        with pytest.raises(ConfigurationError):
            TimeHorizon(T=1.0, grid_points=1)


class TestJumpLaw:
    def test_two_point(self):
        law = JumpLaw.two_point(0.9, 1.1)
        assert law.f_min == 0.9
        assert law.f_max == 1.1
        assert not law.is_degenerate

    def test_degenerate(self):
        law = JumpLaw.degenerate()
        assert law.is_degenerate
        assert law.f_min == law.f_max == 1.0

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ConfigurationError, match="sum to 1"):
            JumpLaw(atoms=((0.9, 0.5), (1.1, 0.4)))

    def test_mean_must_be_one(self):
        with pytest.raises(ConfigurationError, match="expectation 1"):
            JumpLaw(atoms=((0.9, 0.5), (1.05, 0.5)))

    def test_bounds_must_straddle_one(self):
        with pytest.raises(ConfigurationError, match="f_min <= 1 <= f_max"):
            JumpLaw(atoms=((2.0, 0.5), (0.0, 0.5)))

    def test_sizes_must_respect_bounds(self):
        with pytest.raises(ConfigurationError, match="within"):
            JumpLaw(atoms=((0.9, 0.5), (1.1, 0.5)), f_min=0.95, f_max=1.1)

    def test_sampling_is_deterministic(self):
        law = JumpLaw.two_point(0.8, 1.2)
        a = law.sample(np.random.Generator(np.random.Philox(key=7)), 100)
        b = law.sample(np.random.Generator(np.random.Philox(key=7)), 100)
        assert np.array_equal(a, b)
        assert set(np.unique(a)) <= {0.8, 1.2}


class TestEventPath:
    def test_zero_hit_cannot_jump_at_stop(self):
        with pytest.raises(ValueError, match="continuous"):
            EventPath(
                y0=1.0, drift_rate=-1.0, events=((1.0, 1.0),),
                stop_time=1.0, stop_reason=StopReason.HIT_ZERO, horizon=1.0,
            )

    def test_no_events_after_stop(self):
        with pytest.raises(ValueError, match="after the stop"):
            EventPath(
                y0=1.0, drift_rate=-1.0, events=((0.8, 1.0),),
                stop_time=0.5, stop_reason=StopReason.JUMPED, horizon=1.0,
            )

    def test_zero_hit_must_reach_zero(self):
        with pytest.raises(ValueError, match="reach zero"):
            EventPath(
                y0=1.0, drift_rate=-1.0, events=(),
                stop_time=0.5, stop_reason=StopReason.HIT_ZERO, horizon=1.0,
            )


class TestGridPath:
    def test_must_start_at_one(self):
        from arbsim import GridPath

        with pytest.raises(ValueError, match="start at 1"):
            GridPath(times=[0.0, 0.5, 1.0], values=[0.9, 0.5, 0.2], hit_zero=False, hit_time=None)

    def test_absorbed_path_must_stay_at_zero(self):
        from arbsim import GridPath

        with pytest.raises(ValueError, match="stay at zero"):
            GridPath(
                times=[0.0, 0.5, 1.0], values=[1.0, 0.0, 0.3],
                hit_zero=True, hit_time=0.25,
            )

    def test_valid_absorbed_path(self):
        from arbsim import GridPath

        path = GridPath(
            times=[0.0, 0.5, 1.0], values=[1.0, 0.0, 0.0], hit_zero=True, hit_time=0.25
        )
        assert path.terminal_value == 0.0


class TestReconstructValue:
    def test_before_any_event_value_is_drifted(self, unit_horizon):
        path = build_jump_path(1.0, 2.3, 1.0, unit_horizon)
        assert reconstruct_value(path, 0.5) == 0.5

    def test_zero_hit_is_exact(self, unit_horizon):
        path = build_jump_path(1.0, 2.3, 1.0, unit_horizon)
        assert path.stop_reason is StopReason.HIT_ZERO
        assert reconstruct_value(path, 1.0) == 0.0

    def test_jump_then_constant(self, unit_horizon):
        # drift to 0.6, jump by 1.1, flat afterwards
        path = build_jump_path(1.0, 0.4, 1.1, unit_horizon)
        assert reconstruct_value(path, 0.7) == pytest.approx(1.7, abs=1e-15)
        assert reconstruct_value(path, 0.7) == reconstruct_value(path, 1.0)

    @pytest.mark.parametrize("t", [-0.1, 1.5])
    def test_domain_error(self, t, unit_horizon):
        path = build_jump_path(1.0, 0.4, 1.0, unit_horizon)
        with pytest.raises(ValueError, match="outside"):
            reconstruct_value(path, t)


def euler_walk(path: EventPath, n_steps: int) -> np.ndarray:
    """Independent oracle: integrate the drift step by step and apply jumps."""
    dt = path.horizon / n_steps
    v = path.y0
    out = np.empty(n_steps + 1)
    out[0] = v
    t = 0.0
    for k in range(n_steps):
        t_next = (k + 1) * dt
        lo = min(t, path.stop_time)
        hi = min(t_next, path.stop_time)
        v += path.drift_rate * (hi - lo)
        for et, jump in path.events:
            if t < et <= t_next:
                v += jump
        out[k + 1] = v
        t = t_next
    return out


class TestReconstructionAgainstEulerWalk:
    @pytest.mark.parametrize(
        "rho,size,lam",
        [(2.3, 1.0, 1.0), (0.4, 1.1, 1.0), (0.05, 0.9, 2.0), (0.499999, 1.2, 2.0)],
    )
    def test_matches_fine_euler_walk(self, rho, size, lam, unit_horizon):
        path = build_jump_path(lam, rho, size, unit_horizon)
        n_steps = 100_000
        walk = euler_walk(path, n_steps)
        grid = np.linspace(0.0, path.horizon, n_steps + 1)
        recon = np.array([reconstruct_value(path, t) for t in grid[:: n_steps // 1000]])
        assert np.max(np.abs(recon - walk[:: n_steps // 1000])) < 1e-9


class TestPathInvariantsOnSimulatedPaths:
    """Every simulated path obeys the event-path contract."""

    @pytest.mark.parametrize(
        "model,law",
        [
            (Model.COMPENSATED_POISSON, None),
            (Model.COMPOUND_POISSON, JumpLaw.two_point(0.9, 1.1)),
            (Model.COMPOUND_POISSON, JumpLaw(atoms=((0.8, 0.25), (1.0, 0.5), (1.2, 0.25)))),
        ],
    )
    def test_bulk_invariants(self, model, law):
        cfg = MarketConfig(
            model=model, horizon=TimeHorizon(T=1.0), n_paths=12_000, seed=9, lam=1.0,
            jump_law=law,
        )
        ens = sample_jump_paths(cfg)
        # nonnegativity and stopping, exactly
        assert np.all(ens.y_terminal >= 0.0)
        assert np.all(ens.stop_time <= 1.0 / cfg.lam + 1e-15)
        probe = np.linspace(0.0, 1.0, 7)
        for t in probe:
            assert np.all(ens.y_at(t) >= 0.0)
        # constructing EventPath objects revalidates their invariants
        for i in range(0, ens.n, 997):
            path = ens.event_path(i)
            assert reconstruct_value(path, path.horizon) == ens.y_terminal[i]

    @given(
        lam=st.floats(min_value=1.0, max_value=5.0),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=20, deadline=None)
    def test_random_configs_keep_invariants(self, lam, seed):
        cfg = MarketConfig(
            model=Model.COMPENSATED_POISSON,
            horizon=TimeHorizon(T=1.0),
            n_paths=500,
            seed=seed,
            lam=lam,
        )
        ens = sample_jump_paths(cfg)
        assert np.all(ens.y_terminal >= 0.0)
        hit = ens.stop_reason == 0
        assert np.all(np.abs(ens.stop_time[hit] - 1.0 / lam) < 1e-12)
        # paths are flat after their stop time
        after = ens.y_at(1.0)
        assert np.array_equal(after, ens.y_terminal)


class TestEstimate:
    def test_interval_and_width(self):
        est = Estimate(mean=0.5, std_error=0.1, n=100, confidence=0.95)
        lo, hi = est.interval()
        assert lo == pytest.approx(0.5 - 1.959964 * 0.1, abs=1e-5)
        assert hi == pytest.approx(0.5 + 1.959964 * 0.1, abs=1e-5)

    def test_interval_clamped(self):
        est = Estimate(mean=0.99, std_error=0.05, n=100, confidence=0.99)
        lo, hi = est.interval(clamp=(0.0, 1.0))
        assert hi == 1.0
        assert lo < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Estimate(mean=0.0, std_error=-1.0, n=10)
        with pytest.raises(ValueError):
            Estimate(mean=0.0, std_error=0.0, n=0)
        with pytest.raises(ValueError):
            Estimate(mean=0.0, std_error=0.0, n=10, confidence=1.0)

    def test_mean_estimate_matches_numpy(self):
        rng = np.random.default_rng(3)
        xs = rng.normal(size=1000)
        est = mean_estimate(xs, confidence=0.99)
        assert est.mean == pytest.approx(xs.mean())
        assert est.std_error == pytest.approx(xs.std(ddof=1) / math.sqrt(1000))


class TestCiContains:
    def test_wide_interval_contains_target(self):
        est = Estimate(mean=1.0, std_error=0.01, n=10**6, confidence=0.99)
        assert ci_contains(est, 1.0)

    def test_distant_target_excluded(self):
        est = Estimate(mean=0.632, std_error=0.0005, n=10**6, confidence=0.99)
        assert not ci_contains(est, 1.0)

    def test_near_target_included(self):
        est = Estimate(mean=0.3679, std_error=0.0005, n=10**6, confidence=0.99)
        assert ci_contains(est, math.exp(-1.0))

    @given(
        mean=st.floats(-10, 10),
        se=st.floats(1e-6, 1.0),
        offset=st.floats(-5, 5),
    )
    @settings(max_examples=100)
    def test_symmetric_in_deviation(self, mean, se, offset):
        est = Estimate(mean=mean, std_error=se, n=100, confidence=0.99)
        assert ci_contains(est, mean + offset) == ci_contains(est, mean - offset)


class TestZValue:
    def test_standard_quantiles(self):
        assert z_value(0.99) == pytest.approx(2.5758293, abs=1e-6)
        assert z_value(0.95) == pytest.approx(1.9599640, abs=1e-6)
        assert z_value(0.99, two_sided=False) == pytest.approx(2.3263479, abs=1e-6)


class TestStrategySpec:
    def test_capital_must_be_below_one(self):
        with pytest.raises(ConfigurationError):
            StrategySpec(integrand=lambda t, s: 0.0, x=1.0, alpha=0.0)

    def test_alpha_must_be_finite(self):
        with pytest.raises(ConfigurationError):
            StrategySpec(integrand=lambda t, s: 0.0, x=0.5, alpha=math.inf)


class TestMarketConfig:
    def test_intensity_constraint_is_named(self):
        with pytest.raises(ConfigurationError, match="lambda >= 1/T"):
            MarketConfig(
                model=Model.COMPENSATED_POISSON,
                horizon=TimeHorizon(T=1.0),
                n_paths=10,
                seed=1,
                lam=0.5,
            )

    def test_compound_requires_law(self):
        with pytest.raises(ConfigurationError, match="jump law"):
            MarketConfig(
                model=Model.COMPOUND_POISSON,
                horizon=TimeHorizon(T=1.0),
                n_paths=10,
                seed=1,
                lam=1.0,
            )

    def test_cond_expectation_defaults_to_unit_jump_base(self):
        cfg = MarketConfig(
            model=Model.COND_EXPECTATION,
            horizon=TimeHorizon(T=1.0),
            n_paths=10,
            seed=1,
            lam=1.0,
        )
        assert cfg.effective_model is Model.COMPENSATED_POISSON


def test_path_weight_rejects_negative():
    with pytest.raises(ValueError):
        PathWeight(w=-0.1)
    assert PathWeight(w=0.0).w == 0.0
