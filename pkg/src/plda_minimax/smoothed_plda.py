"""Smoothed proximal linear descent ascent.

One step updates, in this order,

1. ``x+ = argmin_X h_y(c_y(x) linearized at x) + (lam/2)||x - x||^2 + (r/2)||x - z||^2``,
2. ``y+ = proj_Y(y + alpha grad_y F(x+, y))``,
3. ``z+ = z + beta (x+ - z)``.

:func:`iterate` drives any primal update through the same dual and averaging
steps and records the trace; the baselines reuse it.
"""

from __future__ import annotations

import csv
import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convex_sets import contains
from .errors import InfeasiblePointError, ParameterError
from .problem_model import CompositeMinimaxProblem, DerivedConstants, OracleCounter, counting, evaluate_F
from .prox_linear import InnerSolverConfig, SubproblemSpec, solve_subproblem
from .schemas import TraceRecord
from .stationarity import evaluate_potential, gs_residuals, os_residual
from .types import Vector

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS = ("k", "F", "dx_norm", "dz_norm", "dual_residual", "gs_primal", "gs_dual", "os_residual", "potential")


@dataclass(frozen=True, eq=False)
class SolverState:
    """The ``(x, y, z)`` triple after ``k`` steps and the last inner certificate."""

    x: Vector
    y: Vector
    z: Vector
    k: int = 0
    certificate: float = 0.0


def initial_state(problem: CompositeMinimaxProblem, x0: object, y0: object, z0: object | None = None) -> SolverState:
    """Starting state; ``z0`` defaults to ``x0``.

    Raises:
        InfeasiblePointError: If ``x0`` or ``y0`` is outside its set.
    """

    x = problem.x_vector(x0)
    y = problem.y_vector(y0)
    if not contains(problem.set_x, x):
        raise InfeasiblePointError("x0 is outside X")
    if not contains(problem.set_y, y):
        raise InfeasiblePointError("y0 is outside Y")
    z = x.copy() if z0 is None else problem.x_vector(z0)
    return SolverState(x, y, z)


@dataclass(frozen=True)
class TraceOptions:
    """Which diagnostics to record and how often.

    Attributes:
        stride: Diagnostics are computed at every ``stride``-th step and at the
            last one; ``0`` disables them.
        gs: Record the GS residuals (also drives best-iterate selection).
        os: Record the OS residual (needs an ``f_oracle``).
        potential: Record ``Phi_r`` (needs an ``f_oracle``).
        objective: Record ``f(x)`` for every step (needs an ``f_oracle``).
        tol: Accuracy of the auxiliary solves behind the diagnostics.
        early_stop: Stop once the GS residual drops to this value.
        keep_states: Keep every ``(x, y, z)`` in the trace.
    """

    stride: int = 1
    gs: bool = True
    os: bool = False
    potential: bool = False
    objective: bool = False
    tol: float = 1e-10
    early_stop: float | None = None
    keep_states: bool = True

    def __post_init__(self) -> None:
        if self.stride < 0:
            raise ParameterError("stride must be >= 0")

    def due(self, k: int, last: bool) -> bool:
        return self.stride > 0 and (k % self.stride == 0 or last)


@dataclass(eq=False)
class IterateTrace:
    """Per-iteration records, optional states and run metadata.

    Holds one record per recorded iterate ``0..K``, so ``len(records)`` is the
    number of steps run plus one.
    """

    records: list[TraceRecord] = field(default_factory=list)
    states: list[SolverState] = field(default_factory=list)
    metadata: dict[str, object] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    def best_index(self) -> int:
        """Index of the smallest recorded ``max(gs_primal, gs_dual)``, else the last record."""

        best, best_value = len(self.records) - 1, float("inf")
        for index, record in enumerate(self.records):
            gs = record.gs
            if gs is not None and gs < best_value:
                best, best_value = index, gs
        return best

    def best_record(self) -> TraceRecord:
        return self.records[self.best_index()]

    def objective_series(self) -> list[float]:
        return [record.objective for record in self.records if record.objective is not None]


def write_trace_csv(trace: IterateTrace, path: str | Path) -> Path:
    """Write the trace with columns :data:`TRACE_COLUMNS`; missing values are empty cells."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for record in trace.records:
            row = record.model_dump()
            writer.writerow(["" if row[name] is None else repr(row[name]) for name in TRACE_COLUMNS])
    return target


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    """Load records written by :func:`write_trace_csv`."""

    with Path(path).open(newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    return [TraceRecord(**{key: (None if value == "" else value) for key, value in row.items()}) for row in rows]


PrimalUpdate = Callable[[CompositeMinimaxProblem, SolverState, DerivedConstants], tuple[Vector, float]]


def prox_linear_update(inner_cfg: InnerSolverConfig | None = None) -> PrimalUpdate:
    """The prox-linear primal update with the given inner solver."""

    def update(problem: CompositeMinimaxProblem, state: SolverState, params: DerivedConstants) -> tuple[Vector, float]:
        spec = SubproblemSpec.build(problem, state.x, state.y, state.z, params.lam, params.r)
        result = solve_subproblem(problem, spec, inner_cfg)
        return result.x, result.certificate

    return update


def advance(
    problem: CompositeMinimaxProblem,
    state: SolverState,
    params: DerivedConstants,
    primal: PrimalUpdate,
) -> SolverState:
    """Apply ``primal`` and then the shared dual ascent and averaging updates."""

    x_next, certificate = primal(problem, state, params)
    y_next = problem.set_y.project(state.y + params.alpha * problem.grad_y(x_next, state.y))
    z_next = state.z + params.beta * (x_next - state.z)
    return SolverState(x_next, y_next, z_next, state.k + 1, certificate)


def step(
    problem: CompositeMinimaxProblem,
    state: SolverState,
    params: DerivedConstants,
    inner_cfg: InnerSolverConfig | None = None,
) -> SolverState:
    """One smoothed PLDA step.

    Raises:
        NonconvergedInner: Propagated from the subproblem solve.
    """

    return advance(problem, state, params, prox_linear_update(inner_cfg))


def _record(
    problem: CompositeMinimaxProblem,
    state: SolverState,
    previous: SolverState | None,
    params: DerivedConstants,
    opts: TraceOptions,
    diagnose: bool,
) -> TraceRecord:
    values: dict[str, float | int | None] = {"k": state.k, "F": evaluate_F(problem, state.x, state.y)}
    if previous is not None:
        values["dx_norm"] = float(np.linalg.norm(state.x - previous.x))
        values["dz_norm"] = float(np.linalg.norm(state.z - previous.z))
        values["dual_residual"] = float(np.linalg.norm(state.y - previous.y)) / params.alpha
    if opts.objective and problem.f_oracle is not None:
        values["objective"] = float(problem.f_oracle(state.x)[0])
    if diagnose:
        if opts.gs:
            gs = gs_residuals(problem, state.x, state.y, params.r, opts.tol)
            values["gs_primal"], values["gs_dual"] = gs.gs_primal, gs.gs_dual
        if opts.os and problem.f_oracle is not None:
            values["os_residual"] = os_residual(problem, state.x, params.r, opts.tol).residual
        if opts.potential and problem.f_oracle is not None:
            values["potential"] = evaluate_potential(problem, state.x, state.y, state.z, params.r, opts.tol).phi
    return TraceRecord(**values)


def iterate(
    problem: CompositeMinimaxProblem,
    params: DerivedConstants,
    horizon: int,
    start: SolverState,
    primal: PrimalUpdate,
    trace_opts: TraceOptions | None = None,
    *,
    method: str = "plda",
    seed: int | None = None,
    counter: OracleCounter | None = None,
) -> tuple[IterateTrace, SolverState]:
    """Run ``horizon`` steps of the three-update loop with a pluggable primal update.

    With a ``counter`` the updates are charged to it, and the run stops after the
    first step that exhausts its budget.

    Returns:
        The trace and the best iterate: the recorded state with the smallest GS
        residual when GS recording is on, else the last state.

    Raises:
        ParameterError: If ``horizon < 1``.
    """

    if horizon < 1:
        raise ParameterError("horizon K must be >= 1")
    opts = trace_opts or TraceOptions()
    trace = IterateTrace(
        metadata={"method": method, "problem": problem.name, "parameters": params.as_dict(), "seed": seed}
    )
    LOGGER.info("Running %s on %s for K=%d", method, problem.name, horizon)
    started = time.perf_counter()
    state = start
    states: dict[int, SolverState] = {0: state}
    trace.records.append(_record(problem, state, None, params, opts, opts.due(0, horizon == 0)))
    for k in range(1, horizon + 1):
        with counting(counter):
            previous, state = state, advance(problem, state, params, primal)
        record = _record(problem, state, previous, params, opts, opts.due(k, k == horizon))
        trace.records.append(record)
        if opts.keep_states or record.gs is not None:
            states[k] = state
        LOGGER.debug("k=%d F=%.6e dx=%.3e", k, record.F, record.dx_norm or 0.0)
        gs = record.gs
        if opts.early_stop is not None and gs is not None and gs <= opts.early_stop:
            LOGGER.info("Early stop at k=%d with GS residual %.3e", k, gs)
            break
        if counter is not None and counter.exhausted:
            LOGGER.info("Oracle budget of %d calls used up at k=%d", counter.budget, k)
            break
    states.setdefault(state.k, state)
    if opts.keep_states:
        trace.states = [states[k] for k in sorted(states)]
    if counter is not None:
        trace.metadata["oracle_calls"] = counter.calls
        trace.metadata["oracle_budget"] = counter.budget
    trace.metadata["wall_time_ms"] = 1e3 * (time.perf_counter() - started)
    best = states[trace.records[trace.best_index()].k]
    LOGGER.info("Finished %s on %s: %d steps, best k=%d", method, problem.name, trace.iterations, best.k)
    return trace, best


def run(
    problem: CompositeMinimaxProblem,
    params: DerivedConstants,
    horizon: int,
    start: SolverState,
    inner_cfg: InnerSolverConfig | None = None,
    trace_opts: TraceOptions | None = None,
    *,
    seed: int | None = None,
    counter: OracleCounter | None = None,
) -> tuple[IterateTrace, SolverState]:
    """Run smoothed PLDA for ``horizon`` steps from ``start``.

    Raises:
        ParameterError: If ``horizon < 1``.
        NonconvergedInner: Propagated from the subproblem solves.
    """

    primal = prox_linear_update(inner_cfg)
    return iterate(problem, params, horizon, start, primal, trace_opts, method="plda", seed=seed, counter=counter)
