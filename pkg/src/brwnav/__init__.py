"""Cost-optimal biased random walk navigation on weighted undirected graphs.

Computes target-directed walk policies that trade expected travel time
against the information needed to deviate from an unbiased random walk,
and prices both sides in bits under a two-part coding scheme.
"""

from .analysis import (
    ComparisonRow,
    McMfptEstimate,
    MfptField,
    UnreachableNodeError,
    gamma_sweep,
    histogram,
    mfpt,
    monte_carlo_mfpt,
    solve_navigation,
)
from .baselines import (
    DistanceField,
    Policy,
    shortest_paths,
    sp_policy,
    urw_kernel,
    validate_policy,
)
from .costs import (
    CodingModel,
    CostReport,
    SupportViolationError,
    build_cost_report,
    coding_decision,
    full_table_bits,
    kl_per_node,
    mdl_step_cross_entropy,
    trajectory_bound,
)
from .graph import (
    EdgeListRecord,
    Graph,
    GraphIngestError,
    load_edge_list,
    load_openflights,
    restrict_to_component,
    write_edge_list,
)
from .solver import (
    BellmanCheckReport,
    ConvergenceError,
    DesirabilitySolution,
    NavigationProblem,
    bellman_check,
    bellman_gap,
    build_operator,
    optimal_policy,
    solve_desirability,
)

__version__ = "0.1.0"

__all__ = [
    "BellmanCheckReport",
    "CodingModel",
    "ComparisonRow",
    "ConvergenceError",
    "CostReport",
    "DesirabilitySolution",
    "DistanceField",
    "EdgeListRecord",
    "Graph",
    "GraphIngestError",
    "McMfptEstimate",
    "MfptField",
    "NavigationProblem",
    "Policy",
    "SupportViolationError",
    "UnreachableNodeError",
    "bellman_check",
    "bellman_gap",
    "build_cost_report",
    "build_operator",
    "coding_decision",
    "full_table_bits",
    "gamma_sweep",
    "histogram",
    "kl_per_node",
    "load_edge_list",
    "load_openflights",
    "mdl_step_cross_entropy",
    "mfpt",
    "monte_carlo_mfpt",
    "optimal_policy",
    "restrict_to_component",
    "shortest_paths",
    "solve_desirability",
    "solve_navigation",
    "sp_policy",
    "trajectory_bound",
    "urw_kernel",
    "validate_policy",
    "write_edge_list",
]
