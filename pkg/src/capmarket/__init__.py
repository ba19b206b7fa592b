"""Nash social welfare allocation through cap-limited Fisher markets.

Exact-rational solver for thrifty-and-modest market equilibria with earning
and utility caps, plus the rounding pipeline that turns a fractional
equilibrium into an integral allocation with a certified approximation ratio.
"""
from .instances import (
    Allocation,
    MarketInstance,
    NswInstance,
    PerturbedMarket,
    as_frac,
    cap_valuations,
    frac_str,
    nsw_value,
    perturb,
    to_market,
)
from .errors import (
    CapMarketError,
    EnumerationGuard,
    InvariantError,
    NotMoneyClearing,
    ParseError,
)
from .flow import FlowNetwork, cancel_cycles, max_flow_with_lower_bounds, money_clearing
from .io import (
    parse_instance,
    parse_state,
    serialize_market,
    serialize_nsw,
    serialize_state,
)
from .lp import (
    build_feasible_flow_system,
    build_min_factor_system,
    feasible_flow,
    min_factor,
)
from .gen import E3Lin2Instance, FixtureData, gen_fixture, gen_hardness, gen_random
from .oracle import brute_money_clearing, brute_nsw, lp_oracle
from .rounding import (
    Certificate,
    NormalizedInstance,
    RoundingForest,
    TreeCheck,
    TreeStats,
    check_half_bound,
    check_retention,
    check_tree_bounds,
    flow_to_forest,
    improve_assignment,
    normalize,
    pipeline,
    preprocess,
    round_forest,
    upper_bound,
)
from .simplex import LpSystem, solve_lp
from .state import EventRecord, MarketState, reach_sets
from .solver import detect_events, run_fptas, solve_no_utility_caps
from .verify import (
    CheckReport,
    verify_approx_equilibrium,
    verify_equilibrium,
    verify_state,
)

__all__ = [
    "Allocation",
    "CapMarketError",
    "Certificate",
    "CheckReport",
    "E3Lin2Instance",
    "EnumerationGuard",
    "EventRecord",
    "FixtureData",
    "FlowNetwork",
    "InvariantError",
    "LpSystem",
    "MarketInstance",
    "MarketState",
    "NormalizedInstance",
    "NotMoneyClearing",
    "NswInstance",
    "ParseError",
    "PerturbedMarket",
    "RoundingForest",
    "TreeCheck",
    "TreeStats",
    "as_frac",
    "brute_money_clearing",
    "brute_nsw",
    "build_feasible_flow_system",
    "build_min_factor_system",
    "cancel_cycles",
    "cap_valuations",
    "check_half_bound",
    "check_retention",
    "check_tree_bounds",
    "detect_events",
    "feasible_flow",
    "flow_to_forest",
    "frac_str",
    "gen_fixture",
    "gen_hardness",
    "gen_random",
    "improve_assignment",
    "lp_oracle",
    "max_flow_with_lower_bounds",
    "min_factor",
    "money_clearing",
    "normalize",
    "nsw_value",
    "parse_instance",
    "parse_state",
    "perturb",
    "pipeline",
    "preprocess",
    "reach_sets",
    "round_forest",
    "run_fptas",
    "serialize_market",
    "serialize_nsw",
    "serialize_state",
    "solve_lp",
    "solve_no_utility_caps",
    "to_market",
    "upper_bound",
    "verify_approx_equilibrium",
    "verify_equilibrium",
    "verify_state",
]

__version__ = "0.1.0"
