"""``solve``: one method on one problem, written as a trace CSV and a JSON summary."""

from __future__ import annotations

import csv
import logging
import time
from pathlib import Path

import numpy as np

from ..baselines import SubgradientConfig, min_formulation, smoothed_gda_run, subgradient_method
from ..errors import PldaError, to_error
from ..problem_model import OracleCounter
from ..schemas import RunConfig, RunSummary
from ..smoothed_plda import IterateTrace, SolverState, run, write_trace_csv
from .common import (
    BuiltProblem,
    build_problem,
    inner_config,
    resolve_parameters,
    resolved_config,
    run_stem,
    trace_options,
    write_json,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_STEP = 0.1


def run_method(
    config: RunConfig,
    built: BuiltProblem,
    step: float | None = None,
    *,
    counter: OracleCounter | None = None,
    horizon: int | None = None,
) -> tuple[IterateTrace, SolverState, dict[str, object]]:
    """Run the configured method and return its trace, best state and parameters.

    ``step`` overrides the initial GDA or subgradient step. ``horizon`` caps the
    number of steps (default ``config.horizon``); parameters are still derived for
    ``config.horizon``. A ``counter`` must wrap ``built.problem``, see
    :func:`~plda_minimax.problem_model.count_oracles`.
    """

    problem = built.problem
    steps = horizon or config.horizon
    if config.method == "subgrad":
        step0 = step or config.params.gda_step or DEFAULT_STEP
        formulation = min_formulation(problem)
        trace = subgradient_method(formulation, SubgradientConfig(step0, steps), built.start.x, counter)
        return trace, trace.states[-1], {"step0": step0}
    params = resolve_parameters(config.params, problem, config.horizon)
    opts = trace_options(config, problem, params)
    if config.method == "sgda":
        gda_step = step or config.params.gda_step or DEFAULT_STEP
        trace, best = smoothed_gda_run(
            problem, params, steps, built.start, gda_step, opts, seed=config.seed, counter=counter
        )
        return trace, best, {**params.as_dict(), "gda_step": gda_step}
    inner = inner_config(config.inner)
    trace, best = run(problem, params, steps, built.start, inner, opts, seed=config.seed, counter=counter)
    return trace, best, params.as_dict()


def write_objective_csv(trace: IterateTrace, path: Path) -> Path:
    """Columns ``k,g,best_g``: ``f`` at every step and its running minimum."""

    path.parent.mkdir(parents=True, exist_ok=True)
    best = np.inf
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["k", "g", "best_g"])
        for record in trace.records:
            if record.objective is None:
                continue
            best = min(best, record.objective)
            writer.writerow([record.k, repr(record.objective), repr(float(best))])
    return path


def summarize(
    config: RunConfig,
    built: BuiltProblem,
    trace: IterateTrace,
    best: SolverState,
    parameters: dict[str, object],
    wall_time_ms: float | None,
) -> RunSummary:
    record = trace.best_record()
    objective = trace.objective_series()
    last = trace.records[-1]
    return RunSummary(
        version=str(resolved_config(config)["version"]),
        config=resolved_config(config),
        problem=built.problem.name,
        method=config.method,
        parameters=parameters,
        iterations=trace.iterations,
        best_iterate={"k": best.k, "x": best.x.tolist(), "y": best.y.tolist(), "record": record.model_dump()},
        residuals={"final": last.model_dump(), "best_gs": record.gs},
        objective=(
            {"initial": objective[0], "final": objective[-1], "best": min(objective)} if objective else {}
        ),
        wall_time_ms=wall_time_ms,
        metadata=dict(built.problem.metadata),
    )


def solve(config: RunConfig) -> dict[str, object]:
    """Run ``config.method`` and write ``<stem>.csv``, ``<stem>-objective.csv`` and ``<stem>.json``."""

    try:
        out = Path(config.output_dir)
        built = build_problem(config.problem, config.seed, out / "data")
        started = time.perf_counter()
        trace, best, parameters = run_method(config, built)
        wall_time_ms = 1e3 * (time.perf_counter() - started)
        stem = run_stem(config)
        trace_path = write_trace_csv(trace, out / f"{stem}.csv")
        objective_path = write_objective_csv(trace, out / f"{stem}-objective.csv")
        summary = summarize(config, built, trace, best, parameters, wall_time_ms)
        summary_path = write_json(out / f"{stem}.json", summary.model_dump(mode="json"))
        LOGGER.info("solve wrote %s and %s", trace_path, summary_path)
        return {
            "trace": str(trace_path),
            "objective": str(objective_path),
            "summary": str(summary_path),
            "iterations": trace.iterations,
            "best_k": best.k,
        }
    except PldaError as exc:
        return to_error(exc)
