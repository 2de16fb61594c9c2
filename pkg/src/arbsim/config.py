"""Experiment configuration: TOML parsing, semantic validation, defaults.

Configs are TOML files with a ``[market]`` section (the model) and an
optional ``[experiment]`` section (orchestration knobs).  Every violation is
reported with the full key path of the offending entry.
"""

import sys
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .types import ConfigurationError, JumpLaw, MarketConfig, Model, TimeHorizon

REPORT_FORMATS = ("json", "csv", "svg")

_MARKET_KEYS = {
    "model", "lambda", "T", "grid_points", "n_paths", "seed", "d",
    "compensate_drift", "base_model", "jump_law",
}
_LAW_KEYS = {"atoms", "f_min", "f_max"}
_EXPERIMENT_KEYS = {
    "output_dir", "report_formats", "confidence", "probe_times", "threads",
    "csv_sample", "hedge_grids", "hedge_paths",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Market configuration plus orchestration and reporting knobs."""

    market: MarketConfig
    output_dir: str = "out"
    report_formats: tuple = ("json",)
    confidence: float = 0.99
    probe_times: tuple = ()
    threads: int = 1
    csv_sample: int = 10_000
    hedge_grids: tuple = (100, 1000, 10000)
    hedge_paths: int = 20_000

    def __post_init__(self):
        if not 0 < self.confidence < 1:
            raise ConfigurationError("experiment.confidence: must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigurationError("experiment.threads: must be >= 1")
        if self.csv_sample < 0:
            raise ConfigurationError("experiment.csv_sample: must be >= 0")
        bad = [f for f in self.report_formats if f not in REPORT_FORMATS]
        if bad:
            raise ConfigurationError(
                f"experiment.report_formats: unknown formats {bad}; valid: {list(REPORT_FORMATS)}"
            )
        T = self.market.horizon.T
        pts = tuple(float(t) for t in self.probe_times)
        if pts:
            if any(not 0 <= t <= T for t in pts):
                raise ConfigurationError("experiment.probe_times: every probe must lie in [0, T]")
            if list(pts) != sorted(pts):
                raise ConfigurationError("experiment.probe_times: probes must be sorted")
            if len(set(pts)) != len(pts):
                raise ConfigurationError("experiment.probe_times: probes must be distinct")
        object.__setattr__(self, "probe_times", pts)
        if len(self.hedge_grids) < 2 or any(int(g) < 2 for g in self.hedge_grids):
            raise ConfigurationError("experiment.hedge_grids: need at least two grids of >= 2 steps")
        object.__setattr__(self, "hedge_grids", tuple(int(g) for g in self.hedge_grids))
        if self.hedge_paths < 2:
            raise ConfigurationError("experiment.hedge_paths: must be >= 2")

    @property
    def probe_grid(self) -> tuple:
        """Configured probes, or the default ten-point grid over [0, T]."""
        if self.probe_times:
            return self.probe_times
        return tuple(np.linspace(0.0, self.market.horizon.T, 10))


def _typed(section: dict, path: str, key: str, kinds, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigurationError(f"{path}.{key}: required key is missing")
        return default
    value = section[key]
    if isinstance(value, bool) and bool not in (kinds if isinstance(kinds, tuple) else (kinds,)):
        raise ConfigurationError(f"{path}.{key}: expected {_kind_name(kinds)}, got a boolean")
    if not isinstance(value, kinds):
        raise ConfigurationError(
            f"{path}.{key}: expected {_kind_name(kinds)}, got {type(value).__name__}"
        )
    return value


def _kind_name(kinds) -> str:
    if isinstance(kinds, tuple):
        return " or ".join(k.__name__ for k in kinds)
    return kinds.__name__


def _reject_unknown(section: dict, path: str, allowed: set):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")


def _parse_law(section: dict) -> JumpLaw:
    _reject_unknown(section, "market.jump_law", _LAW_KEYS)
    atoms = _typed(section, "market.jump_law", "atoms", list, required=True)
    pairs = []
    for i, entry in enumerate(atoms):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ConfigurationError(
                f"market.jump_law.atoms[{i}]: expected a [size, probability] pair"
            )
        pairs.append((float(entry[0]), float(entry[1])))
    f_min = float(_typed(section, "market.jump_law", "f_min", (int, float), default=0.0))
    f_max = float(_typed(section, "market.jump_law", "f_max", (int, float), default=0.0))
    try:
        return JumpLaw(atoms=tuple(pairs), f_min=f_min, f_max=f_max)
    except ConfigurationError as exc:
        raise ConfigurationError(f"market.jump_law: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration.

    Syntax errors surface with the line and column reported by the TOML
    parser; semantic errors name the violated constraint and its key path.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from exc

    _reject_unknown(data, "config", {"market", "experiment"})
    if "market" not in data or not isinstance(data["market"], dict):
        raise ConfigurationError("market: required section is missing")
    market = data["market"]
    _reject_unknown(market, "market", _MARKET_KEYS)

    model_name = _typed(market, "market", "model", str, required=True)
    try:
        model = Model(model_name)
    except ValueError:
        raise ConfigurationError(
            f"market.model: unknown model {model_name!r}; valid: {[m.value for m in Model]}"
        ) from None

    base_model = None
    base_name = _typed(market, "market", "base_model", str)
    if base_name is not None:
        try:
            base_model = Model(base_name)
        except ValueError:
            raise ConfigurationError(
                f"market.base_model: unknown model {base_name!r}; valid: {[m.value for m in Model]}"
            ) from None

    T = float(_typed(market, "market", "T", (int, float), required=True))
    grid_points = int(_typed(market, "market", "grid_points", int, default=1000))
    try:
        horizon = TimeHorizon(T=T, grid_points=grid_points)
    except ConfigurationError as exc:
        raise ConfigurationError(f"market: {exc}") from exc

    lam = _typed(market, "market", "lambda", (int, float))
    law = _parse_law(market["jump_law"]) if "jump_law" in market else None

    try:
        mcfg = MarketConfig(
            model=model,
            horizon=horizon,
            n_paths=int(_typed(market, "market", "n_paths", int, required=True)),
            seed=int(_typed(market, "market", "seed", int, required=True)),
            lam=float(lam) if lam is not None else None,
            jump_law=law,
            d=int(_typed(market, "market", "d", int, default=1)),
            compensate_drift=bool(_typed(market, "market", "compensate_drift", bool, default=True)),
            base_model=base_model,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"market: {exc}") from exc

    exp = data.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigurationError("experiment: expected a section")
    _reject_unknown(exp, "experiment", _EXPERIMENT_KEYS)
    formats = _typed(exp, "experiment", "report_formats", list, default=["json"])
    probe_times = _typed(exp, "experiment", "probe_times", list, default=[])
    hedge_grids = _typed(exp, "experiment", "hedge_grids", list, default=[100, 1000, 10000])
    return ExperimentConfig(
        market=mcfg,
        output_dir=str(_typed(exp, "experiment", "output_dir", str, default="out")),
        report_formats=tuple(formats),
        confidence=float(_typed(exp, "experiment", "confidence", (int, float), default=0.99)),
        probe_times=tuple(probe_times),
        threads=int(_typed(exp, "experiment", "threads", int, default=1)),
        csv_sample=int(_typed(exp, "experiment", "csv_sample", int, default=10_000)),
        hedge_grids=tuple(hedge_grids),
        hedge_paths=int(_typed(exp, "experiment", "hedge_paths", int, default=20_000)),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    n_paths: Optional[int] = None,
    output_dir: Optional[str] = None,
    threads: Optional[int] = None,
) -> ExperimentConfig:
    """Apply command-line overrides on top of a parsed configuration."""
    market = cfg.market
    if seed is not None or n_paths is not None:
        market = replace(
            market,
            seed=market.seed if seed is None else seed,
            n_paths=market.n_paths if n_paths is None else n_paths,
        )
    return replace(
        cfg,
        market=market,
        output_dir=cfg.output_dir if output_dir is None else output_dir,
        threads=cfg.threads if threads is None else threads,
    )
