import pytest

from arbsim import JumpLaw, MarketConfig, Model, TimeHorizon

SEED = 42


@pytest.fixture
def unit_horizon():
    return TimeHorizon(T=1.0)


@pytest.fixture
def comp_config():
    """Compensated unit-jump market, lambda = 1, T = 1."""
    return MarketConfig(
        model=Model.COMPENSATED_POISSON,
        horizon=TimeHorizon(T=1.0),
        n_paths=200_000,
        seed=SEED,
        lam=1.0,
    )


@pytest.fixture
def twopoint_config():
    """Compound market with the {0.9, 1.1} half-half size law."""
    return MarketConfig(
        model=Model.COMPOUND_POISSON,
        horizon=TimeHorizon(T=1.0),
        n_paths=200_000,
        seed=SEED,
        lam=1.0,
        jump_law=JumpLaw.two_point(0.9, 1.1),
    )


@pytest.fixture
def brownian_config():
    return MarketConfig(
        model=Model.STOPPED_BROWNIAN,
        horizon=TimeHorizon(T=1.0, grid_points=500),
        n_paths=50_000,
        seed=SEED,
    )


@pytest.fixture
def uncompensated_config():
    """Negative control: no compensator, so Y is not a martingale."""
    return MarketConfig(
        model=Model.COMPENSATED_POISSON,
        horizon=TimeHorizon(T=1.0),
        n_paths=50_000,
        seed=SEED,
        lam=1.0,
        compensate_drift=False,
    )
