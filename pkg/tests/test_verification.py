from __future__ import annotations

import math

import numpy as np
import pytest

from plda_minimax.convex_sets import Box
from plda_minimax.errors import ParameterError
from plda_minimax.problem_model import (
    CompositeMinimaxProblem,
    DerivedConstants,
    ProblemConstants,
    derive_parameters,
    smooth_minimax_problem,
)
from plda_minimax.runtime import WorkerSettings
from plda_minimax.schemas import CheckReport
from plda_minimax.smoothed_plda import IterateTrace, TraceOptions, initial_state, run
from plda_minimax.verification import (
    TOY_IDS,
    Component,
    StationaryCluster,
    check_dual_error_bound,
    check_dual_step_bound,
    check_gs_os_conversion,
    check_model_bounds,
    check_primal_error_bound,
    check_rate_slope,
    check_solution_lipschitz,
    check_stationary_sets,
    check_sufficient_decrease,
    conversion_bound,
    enumerate_stationary_sets,
    get_toy,
    gs_certificate,
    harvest_trace_points,
    inequality_ratio,
    matches_reference,
    sample_dual_pairs,
    segment_points,
)


@pytest.mark.parametrize(
    ("lhs", "rhs", "expected"),
    [(-1.0, 1.0, 0.0), (1.0, 2.0, 0.5), (-1.0, -2.0, 1.5), (-3.0, -2.0, 0.5)],
)
def test_inequality_ratio(lhs: float, rhs: float, expected: float) -> None:
    assert inequality_ratio(lhs, rhs) == pytest.approx(expected)


def test_inequality_ratio_degenerate_sides() -> None:
    assert inequality_ratio(1.0, 0.0) == math.inf
    assert math.isnan(inequality_ratio(math.nan, 1.0))


def test_check_report_passes_within_tolerance() -> None:
    assert CheckReport(name="a", instances=1, worst_ratio=1.0).passed
    assert not CheckReport(name="a", instances=1, worst_ratio=1.05).passed
    assert CheckReport(name="a", instances=1, worst_ratio=1.05, tolerance=0.1).passed
    assert not CheckReport(name="a", instances=1, worst_ratio=math.nan).passed


def test_get_toy_rejects_unknown_names() -> None:
    assert TOY_IDS == ("cubic_quadratic", "sine_bilinear", "bilinear")
    with pytest.raises(ParameterError):
        get_toy("saddle")


def test_component_distance() -> None:
    segment = Component((0.0, 0.0), (-1.0, 1.0))

    assert segment.distance(0.0, 0.5) == 0.0
    assert segment.distance(3.0, 2.0) == pytest.approx(math.hypot(3.0, 1.0))
    assert Component.point(1.0, 1.0).distance(1.0, 3.0) == 2.0


def test_bilinear_stationary_sets_on_a_coarse_grid() -> None:
    toy = get_toy("bilinear")

    sets = enumerate_stationary_sets(toy, grid_step=1e-2)

    assert sets.truncated
    assert len(sets.gs) == 1
    assert (sets.gs[0].x, sets.gs[0].y) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert sets.mp[0].y_range == pytest.approx((-1.0, 1.0))
    assert all(report.passed for report in check_stationary_sets(toy, grid_step=1e-2))


def test_enumeration_validates_its_grid() -> None:
    with pytest.raises(ParameterError):
        enumerate_stationary_sets(get_toy("bilinear"), grid_step=0.0)


@pytest.mark.slow
@pytest.mark.parametrize("identifier", TOY_IDS)
def test_stationary_sets_match_references(identifier: str) -> None:
    reports = check_stationary_sets(get_toy(identifier), grid_step=1e-3)

    assert [report.passed for report in reports] == [True, True, True]


def test_matches_reference_needs_one_to_one_coverage() -> None:
    cluster = StationaryCluster(x=0.0, y=0.0, score=0.0, x_range=(0.0, 0.0), y_range=(-0.2, 0.2), size=5)
    segment = Component((0.0, 0.0), (-1.0, 1.0))

    assert matches_reference([cluster], [Component.point(0.0, 0.0)], radius=0.01)
    assert not matches_reference([cluster], [segment], radius=0.01)
    assert not matches_reference([], [segment], radius=0.01)


def test_trace_bounds_hold_along_a_bilinear_run() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=30)
    start = initial_state(problem, [1.0], [1.0])
    trace, _ = run(problem, params, 30, start, trace_opts=TraceOptions(stride=0))

    primal = check_primal_error_bound(problem, trace, params)
    dual = check_dual_step_bound(problem, trace, params)

    assert primal.instances == 30
    assert primal.passed
    assert dual.passed


def test_trace_checks_need_recorded_states() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=5)
    start = initial_state(problem, [1.0], [1.0])
    trace, _ = run(problem, params, 5, start, trace_opts=TraceOptions(stride=0, keep_states=False))

    with pytest.raises(ParameterError):
        check_primal_error_bound(problem, trace, params)


def _bilinear_run(horizon: int) -> tuple[CompositeMinimaxProblem, DerivedConstants, IterateTrace]:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=horizon)
    trace, _ = run(problem, params, horizon, initial_state(problem, [1.0], [1.0]), trace_opts=TraceOptions(stride=0))
    return problem, params, trace


def test_gs_certificate_scales_the_largest_displacement() -> None:
    params = derive_parameters(get_toy("bilinear").problem.constants, "general", horizon=30)

    assert gs_certificate(params, 0.1, 0.3, 0.2) == pytest.approx(params.rho_conv * 0.3)


def test_conversion_bound_needs_its_modulus() -> None:
    params = derive_parameters(get_toy("bilinear").problem.constants, "general", horizon=30)
    eps = 1e-4
    u = eps * (1.0 + params.alpha * params.lipschitz / params.r)
    assert params.kappa is not None

    expected = math.sqrt(params.kappa * u) + params.sigma2 * u + eps / params.r
    assert conversion_bound(params, eps) == pytest.approx(expected)
    assert conversion_bound(params, 0.0) == 0.0
    with pytest.raises(ParameterError):
        conversion_bound(params, eps, theta=0.5)


def test_model_bounds_flag_an_understated_lipschitz_constant() -> None:
    assert check_model_bounds(get_toy("bilinear").problem, samples=10).passed
    assert check_model_bounds(get_toy("cubic_quadratic").problem, samples=10).passed

    understated = smooth_minimax_problem(
        value=lambda x, y: float(x[0] ** 2),
        grad_x=lambda x, y: np.array([2.0 * x[0]]),
        grad_y=lambda x, y: np.zeros(1),
        set_x=Box.interval(-1.0, 1.0),
        set_y=Box.interval(-1.0, 1.0),
        constants=ProblemConstants(lipschitz_h=1.0, lipschitz_c=0.1, diam_y=2.0),
    )
    assert not check_model_bounds(understated, samples=10).passed


def test_solution_lipschitz_on_the_bilinear_toy() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=30)

    report = check_solution_lipschitz(problem, params, samples=5)

    assert report.instances == 10
    assert report.passed


def test_sufficient_decrease_along_a_bilinear_run() -> None:
    problem, params, trace = _bilinear_run(20)

    report = check_sufficient_decrease(problem, trace, params)

    assert report.instances == 20
    assert report.passed


def test_dual_error_bound_forms() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=30)
    samples = sample_dual_pairs(problem, 5, seed=1)

    report = check_dual_error_bound(problem, samples, params)

    assert report.details["form"] == "kappa"
    assert report.passed
    with pytest.raises(ParameterError):
        check_dual_error_bound(problem, samples, params, form="omega")


def test_gs_os_conversion_on_a_bilinear_segment() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=30)
    points = segment_points(problem, (np.zeros(1), np.zeros(1)), (np.ones(1), np.ones(1)), params.r)

    report = check_gs_os_conversion(problem, points, params)

    assert report.passed
    assert report.details["theory_exponent"] == 0.5
    with pytest.raises(ParameterError):
        check_gs_os_conversion(problem, points[:2], params)


def test_gs_os_conversion_bounds_points_harvested_from_a_run() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=30)
    points = segment_points(problem, (np.zeros(1), np.zeros(1)), (np.ones(1), np.ones(1)), params.r)
    start = initial_state(problem, [1.0], [1.0])
    trace, _ = run(problem, params, 30, start, trace_opts=TraceOptions(stride=5, keep_states=True))

    harvested = harvest_trace_points(problem, trace, params.r)
    report = check_gs_os_conversion(problem, points, params, harvested=harvested)

    assert len(harvested) == 16
    assert all(problem.set_x.contains(point.x) for point in harvested)
    assert report.details["harvested"] == 16
    assert report.instances == len(points) + len(harvested) + 1
    assert report.passed
    with pytest.raises(ParameterError):
        harvest_trace_points(problem, IterateTrace(), params.r)


def test_rate_slope_reports_the_fitted_slope() -> None:
    problem = get_toy("bilinear").problem
    start = initial_state(problem, [1.0], [1.0])

    report = check_rate_slope(problem, "general", [20, 40], start, stride=10, workers=WorkerSettings(max_workers=1))

    assert report.name == "rate_slope"
    assert report.instances == 1
    assert report.details["horizons"] == [20, 40]
    assert len(report.details["residuals"]) == 2
