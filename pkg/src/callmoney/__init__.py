"""Equilibrium simulator for the broker call money market.

A stock index follows geometric Brownian motion; a continuous-time Kelly
gambler levers an index position with margin loans funded by an
inelastically supplied call money pool.  The package simulates the
coupled system, verifies its structural properties (martingale and
convergence behavior, hitting-probability bounds), and emits the data
and figures behind the standard table and figure set.
"""

from .analysis import (
    doob_majorant,
    envelope_margin_minimum,
    epanechnikov_kde,
    realized_growth,
    relative_growth_factor,
    relative_std_bounds,
    theorem_suite,
)
from .engine import (
    MarketState,
    Path,
    PathStream,
    SimConfig,
    initial_state,
    pathwise_lemma1_margin,
    simulate_block,
    simulate_path,
    step,
)
from .ensemble import (
    EnsembleSpec,
    EnsembleStats,
    hitting_probability,
    moment_series,
    run_ensemble,
    terminal_samples,
)
from .errors import DomainError, ParameterError, UsageError
from .manifest import ExperimentManifest, parse_config
from .model import (
    ModelParams,
    demand_elasticity,
    demand_quantity,
    derive_params,
    equilibrium_rate,
    growth_rate,
    inverse_demand,
    kelly_leverage,
    optimal_growth,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ParameterError",
    "UsageError",
    "ModelParams",
    "derive_params",
    "equilibrium_rate",
    "kelly_leverage",
    "growth_rate",
    "optimal_growth",
    "demand_quantity",
    "inverse_demand",
    "demand_elasticity",
    "MarketState",
    "Path",
    "PathStream",
    "SimConfig",
    "initial_state",
    "step",
    "simulate_path",
    "simulate_block",
    "pathwise_lemma1_margin",
    "EnsembleSpec",
    "EnsembleStats",
    "run_ensemble",
    "hitting_probability",
    "moment_series",
    "terminal_samples",
    "doob_majorant",
    "relative_std_bounds",
    "realized_growth",
    "relative_growth_factor",
    "epanechnikov_kde",
    "envelope_margin_minimum",
    "theorem_suite",
    "ExperimentManifest",
    "parse_config",
    "__version__",
]
