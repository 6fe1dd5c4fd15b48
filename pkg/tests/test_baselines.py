from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from plda_minimax.baselines import (
    STEP_GRID,
    SubgradientConfig,
    clarke_subgradient_max,
    final_objective,
    gda_update,
    grid_search,
    min_formulation,
    smoothed_gda_run,
    subgradient_method,
)
from plda_minimax.convex_sets import Box
from plda_minimax.errors import ParameterError, Unsupported
from plda_minimax.problem_model import count_oracles, derive_parameters, smooth_minimax_problem
from plda_minimax.schemas import TraceRecord
from plda_minimax.smoothed_plda import IterateTrace, SolverState, TraceOptions, initial_state
from plda_minimax.verification import get_toy


def test_clarke_subgradient_takes_the_first_maximizer() -> None:
    pieces = [np.array([1.0]), np.array([2.0]), np.array([3.0])]

    assert clarke_subgradient_max([1.0, 3.0, 3.0], pieces).tolist() == [2.0]
    with pytest.raises(ParameterError):
        clarke_subgradient_max([], [])
    with pytest.raises(ParameterError):
        clarke_subgradient_max([1.0], pieces)


def test_subgradient_schedule() -> None:
    cfg = SubgradientConfig(step0=0.5, horizon=10)

    assert cfg.step_at(3) == pytest.approx(0.25)
    assert SubgradientConfig(step0=0.5, horizon=10, diminishing=False).step_at(3) == 0.5
    with pytest.raises(ParameterError):
        SubgradientConfig(step0=0.0, horizon=10)
    with pytest.raises(ParameterError):
        SubgradientConfig(step0=1.0, horizon=0)


def test_subgradient_method_drives_absolute_value_down() -> None:
    formulation = min_formulation(get_toy("bilinear").problem)

    trace = subgradient_method(formulation, SubgradientConfig(step0=0.5, horizon=50), [1.0])

    assert trace.iterations == 50
    assert trace.records[0].objective == 1.0
    assert min(trace.objective_series()) < 0.2
    assert trace.metadata["method"] == "subgrad"
    assert len(trace.states) == 51


def test_min_formulation_needs_a_max_oracle() -> None:
    problem = smooth_minimax_problem(
        value=lambda x, y: float(x[0] * y[0]),
        grad_x=lambda x, y: np.array([y[0]]),
        grad_y=lambda x, y: np.array([x[0]]),
        set_x=Box.interval(-1.0, 1.0),
        set_y=Box.interval(-1.0, 1.0),
        constants=get_toy("bilinear").problem.constants,
    )

    with pytest.raises(Unsupported):
        min_formulation(problem)


def test_smoothed_gda_shares_the_dual_and_averaging_updates() -> None:
    problem = get_toy("cubic_quadratic").problem
    params = derive_parameters(problem.constants, "general", horizon=20)
    start = initial_state(problem, [0.5], [0.0])

    trace, best = smoothed_gda_run(problem, params, 20, start, step=0.01, trace_opts=TraceOptions(stride=0))

    assert trace.metadata["method"] == "sgda"
    assert trace.metadata["gda_step"] == 0.01
    assert trace.metadata["gda_schedule"] == "diminishing"
    assert trace.iterations == 20
    assert best.k == 20
    assert problem.set_x.contains(best.x)


def test_final_objective_falls_back_to_F() -> None:
    trace = IterateTrace(records=[TraceRecord(k=0, F=2.0), TraceRecord(k=1, F=1.5)])

    assert final_objective(trace) == 1.5
    trace.records.append(TraceRecord(k=2, F=1.0, objective=0.5))
    assert final_objective(trace) == 0.5


def test_grid_search_keeps_the_lowest_score_in_grid_order() -> None:
    result = grid_search(lambda step: (step - 0.1) ** 2, {"step": STEP_GRID}, lambda value: value)

    assert result.best == {"step": 0.1}
    assert result.result == pytest.approx(0.0)
    assert [point["step"] for point, _ in result.scores] == list(STEP_GRID)


def test_grid_search_over_two_axes_and_empty_grid() -> None:
    result = grid_search(lambda a, b: a + b, {"a": [3, 1], "b": [5, 2]}, float)

    assert result.best == {"a": 1, "b": 2}
    assert [tuple(point.values()) for point, _ in result.scores] == [(3, 5), (3, 2), (1, 5), (1, 2)]
    with pytest.raises(ParameterError):
        grid_search(lambda step: step, {"step": []}, float)


def test_smoothed_gda_primal_step_diminishes_with_k() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=10)
    one = np.ones(1)

    diminishing = gda_update(0.5)
    assert diminishing(problem, SolverState(one, one, one, 0), params)[0] == pytest.approx([0.5])
    assert diminishing(problem, SolverState(one, one, one, 3), params)[0] == pytest.approx([0.75])

    constant = gda_update(0.5, diminishing=False)
    assert constant(problem, SolverState(one, one, one, 3), params)[0] == pytest.approx([0.5])
    with pytest.raises(ParameterError):
        gda_update(0.0)


def test_constant_gda_schedule_is_recorded() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=5)
    start = initial_state(problem, [0.5], [0.0])

    opts = TraceOptions(stride=0)
    trace, _ = smoothed_gda_run(problem, params, 5, start, step=0.1, trace_opts=opts, diminishing=False)

    assert trace.metadata["gda_schedule"] == "constant"


def test_oracle_counter_charges_only_calls_inside_counting() -> None:
    problem = get_toy("bilinear").problem
    counted, counter = count_oracles(problem, budget=2)
    x, y = np.array([0.5]), np.array([0.5])

    counted.c_eval(x, y)
    assert counter.calls == 0
    with counter.counting():
        counted.c_eval(x, y)
        counted.grad_y(x, y)
    counted.grad_y(x, y)
    assert counter.calls == 2
    assert counter.exhausted
    assert counted.c_eval(x, y).tolist() == problem.c_eval(x, y).tolist()
    with pytest.raises(ParameterError):
        count_oracles(problem, budget=0)


def test_subgradient_method_stops_once_the_budget_is_used() -> None:
    problem, counter = count_oracles(get_toy("bilinear").problem, budget=10)

    trace = subgradient_method(min_formulation(problem), SubgradientConfig(step0=0.5, horizon=50), [1.0], counter)

    assert counter.exhausted
    assert trace.iterations < 50
    assert trace.metadata["oracle_calls"] == counter.calls
    assert counter.calls >= 10
    assert trace.metadata["oracle_budget"] == 10


def test_grid_search_ranks_non_finite_scores_last() -> None:
    scores = {1.0: math.nan, 0.5: math.inf, 0.1: 3.0, 0.05: 1.0}

    result = grid_search(lambda step: scores[step], {"step": list(scores)}, lambda value: value)

    assert result.best == {"step": 0.05}
    assert result.result == 1.0
    assert math.isnan(result.scores[0][1])


def test_grid_search_keeps_the_first_point_when_every_score_diverges(
    caplog: pytest.LogCaptureFixture,
) -> None:
    with caplog.at_level(logging.WARNING, logger="plda_minimax.baselines"):
        result = grid_search(lambda step: math.nan, {"step": [1.0, 0.5]}, lambda value: value)

    assert result.best == {"step": 1.0}
    assert "non-finite" in caplog.text
