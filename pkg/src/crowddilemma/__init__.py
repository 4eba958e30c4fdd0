"""Evolutionary analysis engine for the iterated crowdsourcing dilemma game.

Exact payoffs of all 4096 reactive strategy pairs under implementation
noise, ESS and efficiency classification across the (d, q) parameter plane,
the single-shot phase diagram, and replicator-dynamics basin sizes.
"""

from .game import (
    CHAIN_STATES,
    ChainState,
    Params,
    RealizedAction,
    SelectedAction,
    error_distribution,
    mirror,
    realize,
    stage_payoff,
    stage_payoff_oracle,
)
from .strategies import (
    CATALOG,
    CatalogEntry,
    ReactiveStrategy,
    catalog_index,
    decode,
    encode,
)
from .ratpoly import EpsPoly, EpsRatFunc, ExactSolveError, solve_stationary_exact
from .markov import (
    PayoffResult,
    StationarySolveError,
    average_payoff,
    build_transition,
    payoff_series,
    selected_pair_limits,
    simulate_visit_counts,
    stationary,
)
from .ess import (
    EssReport,
    EssVerdict,
    RegionInfo,
    compare_small_eps,
    efficient_subset,
    is_ess,
    pd_reduction_check,
    region_labels,
    scan_all_ess,
    single_shot_ess,
)
from .replicator import (
    BasinError,
    BasinResult,
    basin_three,
    basin_two,
    integrate_to_absorption,
    payoff_matrix,
    region_basin_shares,
    replicator_rhs,
)

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "CHAIN_STATES",
    "BasinError",
    "BasinResult",
    "CatalogEntry",
    "ChainState",
    "EpsPoly",
    "EpsRatFunc",
    "EssReport",
    "EssVerdict",
    "ExactSolveError",
    "Params",
    "PayoffResult",
    "ReactiveStrategy",
    "RealizedAction",
    "RegionInfo",
    "SelectedAction",
    "StationarySolveError",
    "average_payoff",
    "basin_three",
    "basin_two",
    "build_transition",
    "catalog_index",
    "compare_small_eps",
    "decode",
    "efficient_subset",
    "encode",
    "error_distribution",
    "integrate_to_absorption",
    "is_ess",
    "mirror",
    "payoff_matrix",
    "payoff_series",
    "pd_reduction_check",
    "realize",
    "region_basin_shares",
    "region_labels",
    "replicator_rhs",
    "scan_all_ess",
    "selected_pair_limits",
    "simulate_visit_counts",
    "single_shot_ess",
    "solve_stationary_exact",
    "stage_payoff",
    "stage_payoff_oracle",
    "stationary",
]
