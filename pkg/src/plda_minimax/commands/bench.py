"""``bench``: smoothed PLDA against grid-searched smoothed GDA and the subgradient method.

Every method gets the same oracle budget: ``oracle_budget`` when configured,
otherwise the calls PLDA spends in ``K`` steps. The baselines pick their
initial step from :data:`~plda_minimax.baselines.STEP_GRID` by final
objective and run the diminishing schedule until the budget is used up.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Callable
from dataclasses import replace
from pathlib import Path

from ..baselines import STEP_GRID, final_objective, finite_or_inf, grid_search
from ..errors import PldaError, to_error
from ..problem_model import OracleCounter, count_oracles
from ..runtime import WorkerSettings, gather_runs
from ..schemas import BenchRow, RunConfig, SolverMethod
from ..smoothed_plda import IterateTrace, SolverState, write_trace_csv
from ..types import Vector
from ..wdro import (
    ClassificationDataset,
    MlpModel,
    accuracy,
    mean_squared_error,
    synth_ring_classification,
    write_decision_boundary_csv,
)
from ..wdro.data import TEST_BAND
from .common import BuiltProblem, build_problem, resolved_config, run_stem, write_json
from .solve import run_method

LOGGER = logging.getLogger(__name__)

METHODS: tuple[SolverMethod, ...] = ("plda", "sgda", "subgrad")
BASELINES: tuple[SolverMethod, ...] = ("sgda", "subgrad")
BENCH_COLUMNS = (
    "method",
    "problem",
    "step",
    "iterations",
    "final_objective",
    "best_objective",
    "oracle_calls",
    "oracle_budget",
)
MAX_BASELINE_STEPS = 100_000

MethodResult = tuple[IterateTrace, SolverState, float | None]


def _bench_config(config: RunConfig, method: SolverMethod) -> RunConfig:
    # Only f(x) is tracked during a benchmark.
    return config.model_copy(update={"method": method, "stride": 0})


def _counted(built: BuiltProblem, budget: int | None) -> tuple[BuiltProblem, OracleCounter]:
    problem, counter = count_oracles(built.problem, budget)
    return replace(built, problem=problem), counter


def run_plda(config: RunConfig, built: BuiltProblem) -> MethodResult:
    """PLDA for ``K`` steps, stopped early by ``oracle_budget`` when one is configured."""

    counted, counter = _counted(built, config.oracle_budget)
    trace, best, _ = run_method(_bench_config(config, "plda"), counted, counter=counter)
    return trace, best, None


def _baseline_runner(
    config: RunConfig, built: BuiltProblem, method: SolverMethod, budget: int
) -> Callable[[], MethodResult]:
    method_config = _bench_config(config, method)
    # Every step costs at least one oracle call, so the budget bounds the step count.
    horizon = min(budget, MAX_BASELINE_STEPS)
    if budget > MAX_BASELINE_STEPS:
        LOGGER.warning("%s capped at %d steps before the budget of %d calls", method, horizon, budget)

    def job() -> MethodResult:
        def one(step: float) -> tuple[IterateTrace, SolverState]:
            counted, counter = _counted(built, budget)
            trace, best, _ = run_method(method_config, counted, step, counter=counter, horizon=horizon)
            return trace, best

        result = grid_search(one, {"step": STEP_GRID}, lambda outcome: final_objective(outcome[0]))
        step = result.best["step"]
        return result.result[0], result.result[1], float(step) if isinstance(step, (int, float)) else None

    return job


def oracle_budget(config: RunConfig, plda: IterateTrace) -> int:
    """The shared budget: the configured one, else the calls of the PLDA run."""

    if config.oracle_budget is not None:
        return config.oracle_budget
    calls = plda.metadata.get("oracle_calls")
    return max(int(calls), 1) if isinstance(calls, int) else 1


def compare_methods(config: RunConfig, built: BuiltProblem) -> list[MethodResult]:
    """Final traces of :data:`METHODS` in order under one oracle budget, each baseline at its best grid step."""

    plda = run_plda(config, built)
    budget = oracle_budget(config, plda[0])
    plda[0].metadata["oracle_budget"] = budget
    LOGGER.info("bench on %s: oracle budget %d calls per method", built.problem.name, budget)
    jobs = [_baseline_runner(config, built, method, budget) for method in BASELINES]
    return [plda, *gather_runs(jobs, WorkerSettings(max_workers=config.workers))]


def bench_row(method: SolverMethod, problem: str, trace: IterateTrace, step: float | None) -> BenchRow:
    series = trace.objective_series() or [record.F for record in trace.records]
    calls = trace.metadata.get("oracle_calls")
    budget = trace.metadata.get("oracle_budget")
    return BenchRow(
        method=method,
        problem=problem,
        step=step,
        iterations=trace.iterations,
        final_objective=final_objective(trace),
        best_objective=min(series, key=finite_or_inf),
        oracle_calls=calls if isinstance(calls, int) else None,
        oracle_budget=budget if isinstance(budget, int) else None,
    )


def write_bench_csv(rows: list[BenchRow], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(BENCH_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow({key: "" if value is None else value for key, value in row.model_dump().items()})
    return path


def classification_metrics(
    config: RunConfig, built: BuiltProblem, finals: dict[str, Vector], out: Path
) -> dict[str, object]:
    """Train and held-out accuracy of every method and the decision-boundary grid for the MLP family."""

    data = built.data
    assert data is not None
    train = ClassificationDataset(data.features, data.targets, dict(data.metadata))
    model = MlpModel(train)
    # Held-out ring points come from the narrower test band.
    test = None
    if config.problem.data_path is None:
        test = synth_ring_classification(config.problem.n, TEST_BAND, config.seed + 1)
    metrics: dict[str, object] = {}
    for method, theta in finals.items():
        scores = {"train_accuracy": accuracy(theta, model)}
        if test is not None:
            scores["test_accuracy"] = accuracy(theta, model, test)
        metrics[method] = scores
    if train.dim == 2:
        name = f"{config.command}-{config.problem.family}-boundary-seed{config.seed}.csv"
        boundary = write_decision_boundary_csv(out / name, model, finals)
        metrics["decision_boundary"] = str(boundary)
    return metrics


def bench(config: RunConfig) -> dict[str, object]:
    """Run all three methods and write ``<stem>.csv`` (one row per method) and ``<stem>.json``."""

    try:
        out = Path(config.output_dir)
        built = build_problem(config.problem, config.seed, out / "data")
        results = compare_methods(config, built)
        rows: list[BenchRow] = []
        traces: dict[str, str] = {}
        finals: dict[str, Vector] = {}
        for method, (trace, final, step) in zip(METHODS, results, strict=True):
            rows.append(bench_row(method, built.problem.name, trace, step))
            method_stem = run_stem(_bench_config(config, method))
            traces[method] = str(write_trace_csv(trace, out / f"{method_stem}.csv"))
            finals[method] = final.x
        stem = f"{config.command}-{config.problem.family}-table-seed{config.seed}"
        table = write_bench_csv(rows, out / f"{stem}.csv")
        payload: dict[str, object] = {
            "config": resolved_config(config),
            "rows": [row.model_dump(mode="json") for row in rows],
            "traces": traces,
        }
        if config.problem.family == "mlp-wdro":
            payload["metrics"] = classification_metrics(config, built, finals, out)
        elif built.data is not None:
            data = built.data
            payload["metrics"] = {method: {"train_mse": mean_squared_error(x, data)} for method, x in finals.items()}
        report = write_json(out / f"{stem}.json", payload)
        winner = min(rows, key=lambda row: finite_or_inf(row.final_objective))
        LOGGER.info("bench on %s: lowest final objective from %s", built.problem.name, winner.method)
        return {"table": str(table), "report": str(report), "rows": payload["rows"]}
    except PldaError as exc:
        return to_error(exc)
