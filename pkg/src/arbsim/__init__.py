"""arbsim: construct markets from a vanishing martingale and certify their
arbitrage structure by simulation.

The construction starts from a nonnegative martingale Y with Y(0) = 1 that
can hit zero, reweights paths by Y(T) to define a new measure, and checks
numerically that the reweighted market admits an almost-sure winning strategy
from zero capital while still carrying a strict local-martingale deflator, so
profits stay bounded in probability.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config, parse_config
from .measure import (
    DirectPSample,
    WeightedSample,
    jump_time_cdf_p,
    p_expectation,
    p_probability,
    sample_under_p_direct,
)
from .models import (
    A0Result,
    BrownianEnsemble,
    JumpEnsemble,
    ModelOutput,
    SurvivalAssetPath,
    build_jump_path,
    check_assumption_A0,
    sample_brownian_paths,
    sample_jump_paths,
    sample_paths,
    simulate_compensated_poisson,
    simulate_compound_poisson,
    simulate_cond_expectation_asset,
    simulate_stopped_brownian,
    survival_asset_at,
    survival_asset_initial,
    survival_value_brownian,
    survival_value_jump,
)
from .strategies import (
    StrategyPathStats,
    ValueProcessRecord,
    check_admissibility,
    delta_hedge_study,
    integrate_value_process_jump,
    jump_superhedge_capital,
    jump_superhedge_integrand,
    jump_superhedge_strategy,
    jump_superhedge_terminals,
    superreplication_price_complete,
    survival_claim_price,
    survival_hedge_capital,
    survival_hedge_delta,
    survival_holding_terminals,
)
from .types import (
    ConfigurationError,
    Estimate,
    EventPath,
    GridPath,
    IncompleteMarketError,
    JumpLaw,
    MarketConfig,
    Model,
    PathState,
    PathWeight,
    StopReason,
    StrategySpec,
    TimeHorizon,
    ci_contains,
    mean_estimate,
    reconstruct_value,
    z_value,
)
from .verify import (
    CertificationReport,
    CheckResult,
    certify_strong_arbitrage,
    check_deflated_supermartingale,
    check_deflator_positivity,
    check_hedge_convergence,
    check_q_loss_frequency,
    check_q_martingale,
    check_strict_lm_gap,
    run_full_certification,
)

__all__ = [
    "__version__",
    "A0Result",
    "BrownianEnsemble",
    "CertificationReport",
    "CheckResult",
    "ConfigurationError",
    "DirectPSample",
    "Estimate",
    "EventPath",
    "ExperimentConfig",
    "GridPath",
    "IncompleteMarketError",
    "JumpEnsemble",
    "JumpLaw",
    "MarketConfig",
    "Model",
    "ModelOutput",
    "PathState",
    "PathWeight",
    "StopReason",
    "StrategyPathStats",
    "StrategySpec",
    "SurvivalAssetPath",
    "TimeHorizon",
    "ValueProcessRecord",
    "WeightedSample",
    "build_jump_path",
    "certify_strong_arbitrage",
    "check_admissibility",
    "check_assumption_A0",
    "check_deflated_supermartingale",
    "check_deflator_positivity",
    "check_hedge_convergence",
    "check_q_loss_frequency",
    "check_q_martingale",
    "check_strict_lm_gap",
    "ci_contains",
    "delta_hedge_study",
    "integrate_value_process_jump",
    "jump_superhedge_capital",
    "jump_superhedge_integrand",
    "jump_superhedge_strategy",
    "jump_superhedge_terminals",
    "jump_time_cdf_p",
    "load_config",
    "mean_estimate",
    "p_expectation",
    "p_probability",
    "parse_config",
    "reconstruct_value",
    "run_full_certification",
    "sample_brownian_paths",
    "sample_jump_paths",
    "sample_paths",
    "sample_under_p_direct",
    "simulate_compensated_poisson",
    "simulate_compound_poisson",
    "simulate_cond_expectation_asset",
    "simulate_stopped_brownian",
    "superreplication_price_complete",
    "survival_asset_at",
    "survival_asset_initial",
    "survival_claim_price",
    "survival_hedge_capital",
    "survival_hedge_delta",
    "survival_holding_terminals",
    "survival_value_brownian",
    "survival_value_jump",
    "z_value",
]
