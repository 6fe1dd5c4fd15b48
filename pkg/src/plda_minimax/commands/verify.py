"""``verify``: the numerical check battery, written as one deterministic JSON report.

Suites:

* ``toys``: stationary-set enumeration against the reference sets.
* ``errors``: primal and dual error bounds, descent, ``x_r`` Lipschitz and model bounds.
* ``rates``: log-log slope of the best GS residual against the horizon.
* ``conversion``: OS residuals of approximate GS points, both on segments
  towards a known GS point and harvested from a short PLDA run.
* ``wdro``: oracle gates, the vertex maximum and the benchmark ordering.

A check that raises is reported as failed with the error envelope in its details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np

from ..baselines import final_objective, finite_or_inf
from ..errors import PldaError, to_error
from ..problem_model import CompositeMinimaxProblem, Regime, derive_parameters
from ..prox_linear import InnerSolverConfig
from ..runtime import WorkerSettings, gather_runs
from ..schemas import CheckReport, ParameterSettings, ProblemSettings, RunConfig
from ..smoothed_plda import TraceOptions, run
from ..verification import (
    TOY_IDS,
    check_dual_error_bound,
    check_dual_step_bound,
    check_gs_certificate,
    check_gs_os_conversion,
    check_model_bounds,
    check_oracle_gate,
    check_primal_error_bound,
    check_rate_slope,
    check_solution_lipschitz,
    check_stationary_sets,
    check_sufficient_decrease,
    check_vertex_maximum,
    get_toy,
    harvest_trace_points,
    inequality_ratio,
    sample_dual_pairs,
    segment_points,
    stationary_point,
)
from ..wdro import ClassificationDataset, LinearRegressionModel, MlpModel, objective_g, parse_norm
from ..wdro.objective import WdroModel
from .bench import compare_methods
from .common import BuiltProblem, build_problem, resolved_config, write_json

LOGGER = logging.getLogger(__name__)

SUITES = ("toys", "errors", "rates", "conversion", "wdro")
CHECK_TOL = 1e-10
ERROR_HORIZON = 50
RATE_HORIZONS = (100, 400, 1600, 6400)
DUAL_SAMPLES = 100
ORACLE_SAMPLES = 50
ERROR_INSTANCES: tuple[tuple[str, dict[str, object]], ...] = (
    ("cubic_quadratic", {}),
    ("sine_bilinear", {}),
    ("bilinear", {}),
    ("strongly_concave", {"d": 2}),
    ("linreg-wdro", {"n": 20, "d": 3}),
)
# Also the instances of the dual error bound.
DECREASE_PROBLEMS = ("strongly_concave", "bilinear")
BENCH_SAMPLES, BENCH_DIM = 500, 10
PRACTICAL = ParameterSettings(source="explicit", lam=10.0, alpha=0.1, beta=0.01, force=True)

Job = Callable[[], list[CheckReport]]


def _tagged(reports: list[CheckReport], tag: str) -> list[CheckReport]:
    return [report.model_copy(update={"name": f"{report.name}[{tag}]"}) for report in reports]


def _guarded(label: str, job: Job) -> Job:
    def guarded() -> list[CheckReport]:
        try:
            return job()
        except PldaError as exc:
            LOGGER.warning("Check %s raised %s", label, exc)
            return [CheckReport(name=label, instances=0, worst_ratio=math.inf, details=to_error(exc))]

    return guarded


def _regime(problem: CompositeMinimaxProblem) -> Regime:
    return "kl" if problem.constants.has_kl else "general"


def _exact_inner() -> InnerSolverConfig:
    return InnerSolverConfig(target_residual=CHECK_TOL, max_iters=20_000, on_nonconvergence="warn")


def _settings(family: str, **settings: object) -> ProblemSettings:
    return ProblemSettings.model_validate({"family": family, **settings})


def _build(family: str, seed: int, **settings: object) -> BuiltProblem:
    return build_problem(_settings(family, **settings), seed)


def toy_jobs(config: RunConfig) -> list[Job]:
    def one(toy_id: str) -> Job:
        label = f"stationary_sets[{toy_id}]"
        return _guarded(label, lambda: check_stationary_sets(get_toy(toy_id), config.grid_step))

    return [one(toy_id) for toy_id in TOY_IDS]


def _trace_checks(built: BuiltProblem, seed: int) -> list[CheckReport]:
    problem = built.problem
    params = derive_parameters(problem.constants, _regime(problem), ERROR_HORIZON)
    opts = TraceOptions(stride=0, gs=False, keep_states=True)
    trace, _ = run(problem, params, ERROR_HORIZON, built.start, _exact_inner(), opts, seed=seed)
    reports = [
        check_primal_error_bound(problem, trace, params, CHECK_TOL),
        check_dual_step_bound(problem, trace, params, CHECK_TOL),
        check_gs_certificate(problem, trace, params, CHECK_TOL),
        check_model_bounds(problem, seed=seed),
    ]
    if problem.name in DECREASE_PROBLEMS:
        monotone = problem.constants.has_kl
        reports.append(check_sufficient_decrease(problem, trace, params, CHECK_TOL, require_monotone=monotone))
    if built.data is None:
        reports.append(check_solution_lipschitz(problem, params, seed=seed, tol=CHECK_TOL))
    return _tagged(reports, problem.name)


def _dual_bound(built: BuiltProblem, seed: int) -> list[CheckReport]:
    problem = built.problem
    params = derive_parameters(problem.constants, _regime(problem), ERROR_HORIZON)
    samples = sample_dual_pairs(problem, DUAL_SAMPLES, seed)
    return _tagged([check_dual_error_bound(problem, samples, params, CHECK_TOL)], problem.name)


def error_jobs(config: RunConfig) -> list[Job]:
    seed = config.seed

    def traces(family: str, extra: dict[str, object]) -> Job:
        return _guarded(f"error_bounds[{family}]", lambda: _trace_checks(_build(family, seed, **extra), seed))

    def dual(family: str, extra: dict[str, object]) -> Job:
        return _guarded(f"dual_error_bound[{family}]", lambda: _dual_bound(_build(family, seed, **extra), seed))

    jobs = [traces(family, extra) for family, extra in ERROR_INSTANCES]
    jobs.extend(dual(family, extra) for family, extra in ERROR_INSTANCES if family in DECREASE_PROBLEMS)
    return jobs


def rate_jobs(config: RunConfig) -> list[Job]:
    def one(family: str, extra: dict[str, object]) -> list[CheckReport]:
        built = _build(family, config.seed, **extra)
        problem = built.problem
        report = check_rate_slope(
            problem,
            _regime(problem),
            RATE_HORIZONS,
            built.start,
            stride=10,
            tolerance=0.1,
            tol=CHECK_TOL,
            inner=_exact_inner(),
            workers=WorkerSettings(max_workers=1),
        )
        return _tagged([report], problem.name)

    return [
        _guarded("rate_slope[strongly_concave]", lambda: one("strongly_concave", {"d": 2})),
        _guarded("rate_slope[bilinear]", lambda: one("bilinear", {})),
    ]


def conversion_jobs(config: RunConfig) -> list[Job]:
    def one(built: BuiltProblem, anchor: tuple[object, object], far: tuple[object, object]) -> list[CheckReport]:
        problem = built.problem
        params = derive_parameters(problem.constants, _regime(problem), ERROR_HORIZON)
        points = segment_points(
            problem,
            (problem.x_vector(anchor[0]), problem.y_vector(anchor[1])),
            (problem.x_vector(far[0]), problem.y_vector(far[1])),
            params.r,
            tol=CHECK_TOL,
        )
        opts = TraceOptions(stride=5, keep_states=True, tol=CHECK_TOL)
        trace, _ = run(problem, params, ERROR_HORIZON, built.start, _exact_inner(), opts, seed=config.seed)
        harvested = harvest_trace_points(problem, trace, params.r, tol=CHECK_TOL)
        report = check_gs_os_conversion(problem, points, params, harvested=harvested, tol=CHECK_TOL)
        return _tagged([report], problem.name)

    def strongly_concave() -> list[CheckReport]:
        return one(_build("strongly_concave", config.seed, d=2), stationary_point(2), (np.ones(2), np.zeros(2)))

    def bilinear() -> list[CheckReport]:
        return one(_build("bilinear", config.seed), ([0.0], [0.0]), ([1.0], [1.0]))

    return [
        _guarded("gs_os_conversion[strongly_concave]", strongly_concave),
        _guarded("gs_os_conversion[bilinear]", bilinear),
    ]


def _oracle_checks(
    problem: CompositeMinimaxProblem, model: WdroModel, settings: ProblemSettings, seed: int
) -> list[CheckReport]:
    rho, p = settings.rho, parse_norm(settings.p)
    reports = [
        check_oracle_gate(problem, ORACLE_SAMPLES, seed),
        check_vertex_maximum(problem, lambda x: objective_g(model, x, rho, p), seed=seed),
    ]
    return _tagged(reports, f"{problem.name}:p={p}")


def _bench_ordering(config: RunConfig, p: str) -> list[CheckReport]:
    bench_config = RunConfig(
        command="bench",
        problem=_settings("linreg-wdro", n=BENCH_SAMPLES, d=BENCH_DIM, rho=1.0, p=p),
        params=PRACTICAL,
        inner=config.inner,
        horizon=config.horizon,
        seed=config.seed,
        workers=1,
    )
    built = build_problem(bench_config.problem, config.seed)
    results = compare_methods(bench_config, built)
    finals = [final_objective(trace) for trace, _, _ in results]
    plda, baselines = finals[0], finals[1:]
    ratio = inequality_ratio(plda, min(baselines, key=finite_or_inf))
    report = CheckReport(
        name=f"bench_ordering[linreg-wdro:p={p}]",
        instances=1,
        worst_ratio=ratio,
        details={
            "plda": plda,
            "sgda": baselines[0],
            "subgrad": baselines[1],
            "horizon": config.horizon,
            "oracle_budget": results[0][0].metadata.get("oracle_budget"),
        },
    )
    LOGGER.log(logging.INFO if report.passed else logging.WARNING, "%s ratio %.4g", report.name, ratio)
    return [report]


def wdro_jobs(config: RunConfig) -> list[Job]:
    seed = config.seed
    jobs: list[Job] = []
    for p in ("1", "2", "inf"):

        def linreg(p: str = p) -> list[CheckReport]:
            settings = _settings("linreg-wdro", n=20, d=3, p=p)
            built = build_problem(settings, seed)
            assert built.data is not None
            return _oracle_checks(built.problem, LinearRegressionModel(built.data), settings, seed)

        jobs.append(_guarded(f"oracles[linreg-wdro:p={p}]", linreg))

    def mlp() -> list[CheckReport]:
        settings = _settings("mlp-wdro", n=50)
        built = build_problem(settings, seed)
        assert built.data is not None
        data = ClassificationDataset(built.data.features, built.data.targets, dict(built.data.metadata))
        return _oracle_checks(built.problem, MlpModel(data), settings, seed)

    jobs.append(_guarded("oracles[mlp-wdro]", mlp))
    for p in ("1", "2", "inf"):
        jobs.append(_guarded(f"bench_ordering[p={p}]", lambda p=p: _bench_ordering(config, p)))
    return jobs


SUITE_JOBS: dict[str, Callable[[RunConfig], list[Job]]] = {
    "toys": toy_jobs,
    "errors": error_jobs,
    "rates": rate_jobs,
    "conversion": conversion_jobs,
    "wdro": wdro_jobs,
}


def run_checks(config: RunConfig) -> list[CheckReport]:
    """Run the configured suite and return its reports in a fixed order."""

    suites = SUITES if config.suite == "all" else (config.suite,)
    jobs = [job for suite in suites for job in SUITE_JOBS[suite](config)]
    LOGGER.info("verify: %d jobs across %s", len(jobs), ", ".join(suites))
    results = gather_runs(jobs, WorkerSettings(max_workers=config.workers))
    return [report for reports in results for report in reports]


def verify(config: RunConfig) -> dict[str, object]:
    """Write ``verify-<suite>-seed<seed>.json``; ``passed`` is false when any check failed."""

    try:
        reports = run_checks(config)
        failed = [report.name for report in reports if not report.passed]
        payload = {
            "config": resolved_config(config),
            "check_reports": [report.model_dump(mode="json") for report in reports],
            "passed": not failed,
        }
        path = write_json(Path(config.output_dir) / f"verify-{config.suite}-seed{config.seed}.json", payload)
        LOGGER.info("verify: %d checks, %d failed", len(reports), len(failed))
        return {"report": str(path), "checks": len(reports), "failed": failed, "passed": not failed}
    except PldaError as exc:
        return to_error(exc)
