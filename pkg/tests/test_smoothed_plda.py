from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from plda_minimax.errors import InfeasiblePointError, ParameterError
from plda_minimax.problem_model import derive_parameters, explicit_parameters
from plda_minimax.prox_linear import InnerSolverConfig
from plda_minimax.smoothed_plda import (
    TRACE_COLUMNS,
    TraceOptions,
    initial_state,
    read_trace_csv,
    run,
    step,
    write_trace_csv,
)
from plda_minimax.verification import get_toy, strongly_concave_instance


def test_initial_state_checks_feasibility() -> None:
    problem = strongly_concave_instance(2)

    state = initial_state(problem, np.ones(2), np.zeros(2))

    assert state.z.tolist() == [1.0, 1.0]
    assert state.k == 0
    with pytest.raises(InfeasiblePointError):
        initial_state(problem, np.full(2, 3.0), np.zeros(2))
    with pytest.raises(InfeasiblePointError):
        initial_state(problem, np.ones(2), np.ones(2))


def test_step_applies_dual_ascent_and_averaging() -> None:
    problem = get_toy("bilinear").problem
    params = explicit_parameters(problem.constants, r=3.0, lam=1.0, alpha=0.5, beta=0.25, force=True)
    state = initial_state(problem, [1.0], [0.5])

    following = step(problem, state, params)

    # Closed-form x-step: center 1, slope y = 0.5, modulus lam + r = 4.
    assert following.x == pytest.approx([0.875])
    assert following.y == pytest.approx([min(0.5 + 0.5 * 0.875, 1.0)])
    assert following.z == pytest.approx([1.0 + 0.25 * (0.875 - 1.0)])
    assert following.k == 1


def test_run_records_every_iterate_and_diagnostics_on_stride() -> None:
    problem = strongly_concave_instance(2)
    params = derive_parameters(problem.constants, "kl", horizon=20)
    start = initial_state(problem, np.ones(2), np.zeros(2))
    opts = TraceOptions(stride=5, os=True, potential=True, objective=True, tol=1e-8)

    trace, best = run(problem, params, 20, start, trace_opts=opts, seed=4)

    assert trace.iterations == 20
    assert [record.k for record in trace.records] == list(range(21))
    assert trace.records[0].dx_norm is None
    assert trace.records[1].dx_norm is not None
    diagnosed = [record.k for record in trace.records if record.gs_primal is not None]
    assert diagnosed == [0, 5, 10, 15, 20]
    assert all(trace.records[k].potential is not None for k in diagnosed)
    assert len(trace.objective_series()) == 21
    assert len(trace.states) == 21
    assert best.k in diagnosed
    assert trace.metadata["seed"] == 4
    assert trace.metadata["parameters"]["regime"] == "kl"


def test_early_stop_ends_the_run() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=50)
    start = initial_state(problem, [1.0], [1.0])

    trace, _ = run(problem, params, 50, start, trace_opts=TraceOptions(early_stop=1e9))

    assert trace.iterations == 1


def test_run_without_diagnostics_returns_last_state() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=10)
    start = initial_state(problem, [1.0], [1.0])

    trace, best = run(problem, params, 10, start, trace_opts=TraceOptions(stride=0, keep_states=False))

    assert best.k == 10
    assert trace.states == []
    assert all(record.gs is None for record in trace.records)


def test_horizon_must_be_positive() -> None:
    problem = get_toy("bilinear").problem
    params = derive_parameters(problem.constants, "general", horizon=10)

    with pytest.raises(ParameterError):
        run(problem, params, 0, initial_state(problem, [1.0], [1.0]))


def test_trace_csv_keeps_columns_and_values(tmp_path: Path) -> None:
    problem = get_toy("cubic_quadratic").problem
    params = derive_parameters(problem.constants, "general", horizon=5)
    start = initial_state(problem, [0.5], [0.0])
    trace, _ = run(problem, params, 5, start, InnerSolverConfig(), TraceOptions(stride=2))

    path = write_trace_csv(trace, tmp_path / "trace.csv")

    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(TRACE_COLUMNS)
    loaded = read_trace_csv(path)
    assert [record.F for record in loaded] == [record.F for record in trace.records]
    assert loaded[1].gs_primal is None
    assert loaded[2].gs_primal == trace.records[2].gs_primal
