"""Comparison methods: the subgradient method on ``min_x f(x)`` and smoothed GDA.

Both consume the same problem oracles as smoothed PLDA. Smoothed GDA shares
its dual and averaging updates through :func:`smoothed_plda.iterate`.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import Generic, TypeVar

import numpy as np

from .convex_sets import ConvexSet
from .errors import ParameterError, Unsupported
from .problem_model import CompositeMinimaxProblem, DerivedConstants, OracleCounter, counting, subgradient_x
from .schemas import TraceRecord
from .smoothed_plda import IterateTrace, PrimalUpdate, SolverState, TraceOptions, iterate
from .types import Vector
from .utils import ordered_cartesian_product

LOGGER = logging.getLogger(__name__)

STEP_GRID: tuple[float, ...] = (1.0, 0.5, 0.1, 0.05, 0.01)
"""Initial step sizes searched for the baselines."""

R = TypeVar("R")


def diminishing_step(step0: float, t: int, diminishing: bool = True) -> float:
    """``step0 / sqrt(t + 1)`` at step ``t``, or ``step0`` for a constant schedule."""

    return step0 / math.sqrt(t + 1) if diminishing else step0


def clarke_subgradient_max(values: Sequence[float], element_subgrads: Sequence[Vector]) -> Vector:
    """Clarke subgradient of ``max_i g_i`` from the subgradients of the pieces.

    Puts all weight on the first maximizing piece, a vertex of the simplex of
    active weights.

    Raises:
        ParameterError: On empty input or mismatched lengths.
    """

    if len(values) == 0 or len(element_subgrads) == 0:
        raise ParameterError("clarke_subgradient_max needs at least one piece")
    if len(values) != len(element_subgrads):
        raise ParameterError("values and element_subgrads must have equal length")
    index = int(np.argmax(np.asarray(values, dtype=np.float64)))
    return np.asarray(element_subgrads[index], dtype=np.float64).copy()


@dataclass(frozen=True)
class SubgradientConfig:
    """Diminishing step schedule ``step0 / sqrt(t + 1)`` over ``horizon`` steps."""

    step0: float
    horizon: int
    diminishing: bool = True

    def __post_init__(self) -> None:
        if not self.step0 > 0:
            raise ParameterError("step0 must be positive")
        if self.horizon < 1:
            raise ParameterError("horizon must be >= 1")

    def step_at(self, t: int) -> float:
        return diminishing_step(self.step0, t, self.diminishing)


@dataclass(frozen=True)
class MinFormulation:
    """``min_{x in X} g(x)`` with a value and a subgradient oracle."""

    g_eval: Callable[[Vector], float]
    g_subgrad: Callable[[Vector], Vector]
    set_x: ConvexSet
    name: str = "min-formulation"


def min_formulation(problem: CompositeMinimaxProblem) -> MinFormulation:
    """``g = f = max_y F(., y)`` with the chain-rule subgradient at the oracle's witness.

    Raises:
        Unsupported: If the problem has no ``f_oracle``.
    """

    oracle = problem.f_oracle
    if oracle is None:
        raise Unsupported("the subgradient method needs an f_oracle")

    def g_eval(x: Vector) -> float:
        return float(oracle(x)[0])

    def g_subgrad(x: Vector) -> Vector:
        _, witness = oracle(x)
        return subgradient_x(problem, x, problem.y_vector(witness))

    return MinFormulation(g_eval, g_subgrad, problem.set_x, problem.name)


def subgradient_method(
    formulation: MinFormulation,
    cfg: SubgradientConfig,
    x0: object,
    counter: OracleCounter | None = None,
) -> IterateTrace:
    """Projected subgradient method ``x+ = proj_X(x - s_t xi_t)``.

    The trace records ``g(x_t)`` in both the ``F`` column and the objective.
    With a ``counter`` only the subgradient evaluations are charged, and the run
    stops after the step that exhausts the budget.
    """

    x = formulation.set_x.project(np.asarray(x0, dtype=np.float64).reshape(-1))
    value = formulation.g_eval(x)
    trace = IterateTrace(metadata={"method": "subgrad", "problem": formulation.name, "step0": cfg.step0})
    trace.records.append(TraceRecord(k=0, F=value, objective=value))
    trace.states.append(SolverState(x, np.zeros(0), x))
    started = time.perf_counter()
    for t in range(cfg.horizon):
        with counting(counter):
            x_next = formulation.set_x.project(x - cfg.step_at(t) * formulation.g_subgrad(x))
        value = formulation.g_eval(x_next)
        trace.records.append(
            TraceRecord(k=t + 1, F=value, dx_norm=float(np.linalg.norm(x_next - x)), objective=value)
        )
        trace.states.append(SolverState(x_next, np.zeros(0), x_next, t + 1))
        x = x_next
        if counter is not None and counter.exhausted:
            break
    if counter is not None:
        trace.metadata["oracle_calls"] = counter.calls
        trace.metadata["oracle_budget"] = counter.budget
    trace.metadata["wall_time_ms"] = 1e3 * (time.perf_counter() - started)
    LOGGER.debug("Subgradient method on %s finished at g=%.6e", formulation.name, value)
    return trace


def gda_update(step0: float, diminishing: bool = True) -> PrimalUpdate:
    """Projected subgradient step on ``F(., y) + (r/2)||. - z||^2``.

    The step at iteration ``k`` is :func:`diminishing_step` of ``step0``.
    """

    if not step0 > 0:
        raise ParameterError("the GDA primal step must be positive")

    def update(problem: CompositeMinimaxProblem, state: SolverState, params: DerivedConstants) -> tuple[Vector, float]:
        xi = subgradient_x(problem, state.x, state.y) + params.r * (state.x - state.z)
        return problem.set_x.project(state.x - diminishing_step(step0, state.k, diminishing) * xi), 0.0

    return update


def smoothed_gda_run(
    problem: CompositeMinimaxProblem,
    params: DerivedConstants,
    horizon: int,
    start: SolverState,
    step: float,
    trace_opts: TraceOptions | None = None,
    *,
    seed: int | None = None,
    diminishing: bool = True,
    counter: OracleCounter | None = None,
) -> tuple[IterateTrace, SolverState]:
    """Smoothed GDA: the PLDA loop with a subgradient primal step starting at ``step``."""

    trace, best = iterate(
        problem,
        params,
        horizon,
        start,
        gda_update(step, diminishing),
        trace_opts,
        method="sgda",
        seed=seed,
        counter=counter,
    )
    trace.metadata["gda_step"] = step
    trace.metadata["gda_schedule"] = "diminishing" if diminishing else "constant"
    return trace, best


def final_objective(trace: IterateTrace) -> float:
    """Last recorded objective ``f(x)``, falling back to the last ``F(x, y)``."""

    series = trace.objective_series()
    return series[-1] if series else trace.records[-1].F


def finite_or_inf(value: float) -> float:
    """Ranking key that places NaN and infinite scores after every finite one."""

    return value if math.isfinite(value) else math.inf


@dataclass(frozen=True)
class GridResult(Generic[R]):
    best: dict[str, object]
    result: R
    scores: list[tuple[dict[str, object], float]]


def grid_search(
    run_one: Callable[..., R],
    grid: Mapping[str, Sequence[object]],
    score: Callable[[R], float],
) -> GridResult[R]:
    """Run ``run_one(**point)`` over the ordered Cartesian product of ``grid``; keep the lowest score.

    Non-finite scores rank last. When every score is non-finite the first point
    is kept and a warning is logged.

    Raises:
        ParameterError: If the grid is empty.
    """

    names = list(grid)
    points = [dict(zip(names, combo, strict=True)) for combo in ordered_cartesian_product([grid[n] for n in names])]
    if not points:
        raise ParameterError("grid_search needs a non-empty grid")
    scores: list[tuple[dict[str, object], float]] = []
    best_point: dict[str, object] | None = None
    best_result: R | None = None
    best_score = math.inf
    for point in points:
        result = run_one(**point)
        value = score(result)
        scores.append((point, value))
        LOGGER.debug("Grid point %s scored %.6e", point, value)
        ranked = finite_or_inf(value)
        if best_point is None or ranked < best_score:
            best_point, best_result, best_score = point, result, ranked
    assert best_point is not None and best_result is not None
    if math.isinf(best_score):
        LOGGER.warning("Every grid point scored a non-finite value; keeping %s", best_point)
    else:
        LOGGER.info("Grid search picked %s (score %.6e)", best_point, best_score)
    return GridResult(best_point, best_result, scores)
