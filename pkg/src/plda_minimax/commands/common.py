"""Shared plumbing of the CLI commands: problem construction, parameters and artifacts."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..problem_model import CompositeMinimaxProblem, DerivedConstants, derive_parameters, explicit_parameters
from ..prox_linear import InnerSolverConfig
from ..schemas import InnerSettings, ParameterSettings, ProblemSettings, RunConfig
from ..smoothed_plda import SolverState, TraceOptions, initial_state
from ..utils import to_serializable
from ..verification import get_toy, strongly_concave_instance
from ..wdro import (
    MlpParams,
    RegressionDataset,
    build_linreg_wdro,
    build_mlp_wdro,
    cached_regression_data,
    load_libsvm,
    parse_norm,
    synth_regression_data,
    synth_ring_classification,
)
from ..wdro.data import TRAIN_BAND
from ..wdro.mlp import DEFAULT_TRUST_RADIUS

LOGGER = logging.getLogger(__name__)

TOY_STARTS: dict[str, tuple[float, float]] = {
    "cubic_quadratic": (0.5, 0.0),
    "sine_bilinear": (1.0, 0.0),
    "bilinear": (1.0, 1.0),
}


@dataclass(frozen=True, eq=False)
class BuiltProblem:
    """A problem and the default start state for its family."""

    problem: CompositeMinimaxProblem
    start: SolverState
    data: RegressionDataset | None = None


def build_problem(settings: ProblemSettings, seed: int, cache_dir: Path | None = None) -> BuiltProblem:
    """Construct the configured problem family and its default start.

    Raises:
        ParameterError: If the family settings are inconsistent.
        DatasetFormatError: If ``data_path`` cannot be parsed.
    """

    family = settings.family
    if family in TOY_STARTS:
        problem = get_toy(family).problem
        x0, y0 = TOY_STARTS[family]
        return BuiltProblem(problem, initial_state(problem, [x0], [y0]))
    if family == "strongly_concave":
        problem = strongly_concave_instance(settings.d)
        return BuiltProblem(problem, initial_state(problem, np.ones(settings.d), np.zeros(settings.d)))
    p = parse_norm(settings.p)
    if family == "linreg-wdro":
        if settings.data_path is not None:
            data = load_libsvm(settings.data_path)
        elif cache_dir is not None:
            data = cached_regression_data(cache_dir, settings.n, settings.d, seed, settings.data_mode)
        else:
            data = synth_regression_data(settings.n, settings.d, seed, settings.data_mode)
        problem = build_linreg_wdro(data, settings.rho, p, settings.trust_radius)
        start = np.zeros(problem.dim_x)
    else:
        if settings.data_path is not None:
            data = load_libsvm(settings.data_path)
        else:
            data = synth_ring_classification(settings.n, TRAIN_BAND, seed)
        radius = DEFAULT_TRUST_RADIUS if settings.trust_radius is None else settings.trust_radius
        problem = build_mlp_wdro(data, settings.rho, p, radius)
        start = MlpParams.random(data.dim, seed).flatten()
    weights = np.full(problem.dim_y, 1.0 / problem.dim_y)
    return BuiltProblem(problem, initial_state(problem, start, weights), data)


def resolve_parameters(settings: ParameterSettings, problem: CompositeMinimaxProblem, horizon: int) -> DerivedConstants:
    """Theory parameters for the horizon, or explicit values checked against the theory ranges.

    Explicit runs default ``lam`` to ``L`` and ``r`` to ``lam``.
    """

    if settings.source == "theory":
        return derive_parameters(problem.constants, settings.regime, horizon)
    assert settings.alpha is not None and settings.beta is not None
    lam = settings.lam if settings.lam is not None else problem.lipschitz
    r = settings.r if settings.r is not None else lam
    return explicit_parameters(
        problem.constants,
        r=r,
        lam=lam,
        alpha=settings.alpha,
        beta=settings.beta,
        force=settings.force,
        regime=settings.regime,
    )


def inner_config(settings: InnerSettings) -> InnerSolverConfig:
    return InnerSolverConfig(
        method=settings.method,
        max_iters=settings.max_iters,
        target_residual=settings.target,
        adaptive=settings.adaptive,
        on_nonconvergence=settings.on_nonconvergence,
    )


def trace_options(config: RunConfig, problem: CompositeMinimaxProblem, params: DerivedConstants) -> TraceOptions:
    """Diagnostics every ``stride`` steps at the inner accuracy; the ``x_r``-based ones only when ``r > L``."""

    weighted = params.r > problem.lipschitz
    has_oracle = problem.f_oracle is not None
    if not weighted:
        LOGGER.warning("r=%g <= L=%g: GS, OS and potential diagnostics are skipped", params.r, problem.lipschitz)
    return TraceOptions(
        stride=config.stride,
        gs=weighted,
        os=weighted and has_oracle,
        potential=weighted and has_oracle,
        objective=has_oracle,
        tol=config.inner.target,
        keep_states=False,
    )


def dump_json(payload: object) -> str:
    """Deterministic JSON: sorted keys, two-space indent, non-finite floats as ``null``."""

    return json.dumps(to_serializable(payload), sort_keys=True, indent=2)


def write_json(path: Path, payload: object) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(payload) + "\n", encoding="utf-8")
    return path


def run_stem(config: RunConfig) -> str:
    return f"{config.command}-{config.problem.family}-{config.method}-seed{config.seed}"


def resolved_config(config: RunConfig) -> dict[str, object]:
    return {"version": __version__, **config.model_dump(mode="json")}
