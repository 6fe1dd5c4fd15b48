"""Toy problems, constructed instances, numerical checks and stationary-set enumeration."""

from .checks import (
    GsPoint,
    check_dual_error_bound,
    check_dual_step_bound,
    check_gs_certificate,
    check_gs_os_conversion,
    check_model_bounds,
    check_oracle_gate,
    check_primal_error_bound,
    check_rate_slope,
    check_solution_lipschitz,
    check_sufficient_decrease,
    check_vertex_maximum,
    conversion_bound,
    gs_certificate,
    harvest_trace_points,
    inequality_ratio,
    sample_dual_pairs,
    segment_points,
)
from .enumerate import (
    StationaryCluster,
    StationarySets,
    check_stationary_sets,
    enumerate_stationary_sets,
    matches_reference,
)
from .instances import quadratic_bilinear_instance, stationary_point, strongly_concave_instance
from .toys import TOY_IDS, Component, ToyProblem2D, get_toy

__all__ = [
    "TOY_IDS",
    "Component",
    "GsPoint",
    "StationaryCluster",
    "StationarySets",
    "ToyProblem2D",
    "check_dual_error_bound",
    "check_dual_step_bound",
    "check_gs_certificate",
    "check_gs_os_conversion",
    "check_model_bounds",
    "check_oracle_gate",
    "check_primal_error_bound",
    "check_rate_slope",
    "check_solution_lipschitz",
    "check_stationary_sets",
    "check_sufficient_decrease",
    "check_vertex_maximum",
    "conversion_bound",
    "enumerate_stationary_sets",
    "get_toy",
    "gs_certificate",
    "harvest_trace_points",
    "inequality_ratio",
    "matches_reference",
    "quadratic_bilinear_instance",
    "sample_dual_pairs",
    "segment_points",
    "stationary_point",
    "strongly_concave_instance",
]
