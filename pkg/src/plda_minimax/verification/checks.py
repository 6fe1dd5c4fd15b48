"""Numerical checks of the error bounds, descent and rate properties of smoothed PLDA.

Every check compares certified quantities: computed distances are shrunk by
their certificates on the side that must be small and grown on the side that
bounds them, so a failure cannot come from inner-solve inaccuracy alone.
Ratios are ``lhs / rhs`` of the checked inequality ``lhs <= rhs``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from typing import Literal, NamedTuple

import numpy as np

from ..convex_sets import Simplex
from ..errors import ParameterError
from ..problem_model import (
    CompositeMinimaxProblem,
    DerivedConstants,
    Regime,
    check_oracles,
    derive_parameters,
    evaluate_F,
    jacobian_matrix,
    kl_dual_modulus,
    sample_point,
)
from ..prox_linear import InnerSolverConfig
from ..runtime import WorkerSettings, gather_runs
from ..schemas import CheckReport
from ..smoothed_plda import IterateTrace, SolverState, TraceOptions, run
from ..stationarity import compute_x_r, compute_x_r_star, dual_prox_step, evaluate_potential, gs_residuals, os_residual
from ..types import Vector
from ..utils import loglog_fit

LOGGER = logging.getLogger(__name__)

ROUNDING_FLOOR = 1e-13
"""Absolute slack for quantities that are exact up to floating-point rounding."""

RELATIVE_ROUNDING = 1e-12
EXACT_GS = 1e-12


class GsPoint(NamedTuple):
    """A point tagged with its measured GS residual ``eps`` and the residual's certificate."""

    x: Vector
    y: Vector
    eps: float
    certificate: float


def inequality_ratio(lhs: float, rhs: float) -> float:
    """Ratio that is ``<= 1`` exactly when ``lhs <= rhs``.

    Equals ``lhs / rhs`` for positive sides and ``0`` when ``lhs <= 0 <= rhs``.
    """

    if math.isnan(lhs) or math.isnan(rhs):
        return math.nan
    if lhs <= 0.0 <= rhs:
        return 0.0
    if rhs > 0.0:
        return lhs / rhs
    if rhs == 0.0:
        return math.inf
    return 1.0 + (lhs - rhs) / abs(rhs)


def _report(name: str, ratios: Sequence[float], tolerance: float = 0.0, **details: object) -> CheckReport:
    worst = max(ratios, default=0.0)
    report = CheckReport(name=name, instances=len(ratios), worst_ratio=worst, tolerance=tolerance, details=details)
    level = logging.INFO if report.passed else logging.WARNING
    LOGGER.log(level, "Check %s over %d instances: worst ratio %.4g", name, len(ratios), worst)
    return report


def _consecutive(trace: IterateTrace) -> list[tuple[SolverState, SolverState]]:
    states = trace.states
    if len(states) < 2 or any(b.k != a.k + 1 for a, b in zip(states, states[1:], strict=False)):
        raise ParameterError("the check needs a trace recorded with keep_states=True")
    return list(zip(states, states[1:], strict=False))


def check_primal_error_bound(
    problem: CompositeMinimaxProblem,
    trace: IterateTrace,
    params: DerivedConstants,
    tol: float = 1e-10,
) -> CheckReport:
    """``||x^{k+1} - x_r(y^k, z^k)|| <= zeta ||x^k - x^{k+1}||`` along a trace."""

    ratios = []
    for state, following in _consecutive(trace):
        xr = compute_x_r(problem, state.y, state.z, params.r, tol)
        lhs = float(np.linalg.norm(following.x - xr.x))
        step = float(np.linalg.norm(state.x - following.x))
        slack = (params.zeta + 2.0) * following.certificate + 2.0 * xr.certificate + ROUNDING_FLOOR
        ratios.append(inequality_ratio(lhs, params.zeta * step + slack))
    return _report("primal_error_bound", ratios, zeta=params.zeta)


def check_dual_step_bound(
    problem: CompositeMinimaxProblem,
    trace: IterateTrace,
    params: DerivedConstants,
    tol: float = 1e-10,
) -> CheckReport:
    """``||y^{k+1} - y_+^k(z^k)|| <= eta ||x^k - x^{k+1}||`` along a trace."""

    lip = params.lipschitz
    ratios = []
    for state, following in _consecutive(trace):
        y_plus = dual_prox_step(problem, state.y, state.z, params.r, params.alpha, tol)
        lhs = float(np.linalg.norm(following.y - y_plus.x)) - y_plus.certificate
        step = float(np.linalg.norm(state.x - following.x))
        slack = params.alpha * lip * (params.zeta + 1.0) * following.certificate + ROUNDING_FLOOR
        ratios.append(inequality_ratio(lhs, params.eta * step + slack))
    return _report("dual_step_bound", ratios, eta=params.eta)


def check_sufficient_decrease(
    problem: CompositeMinimaxProblem,
    trace: IterateTrace,
    params: DerivedConstants,
    tol: float = 1e-10,
    monotone_until: float = 1e-8,
    require_monotone: bool = False,
) -> CheckReport:
    """Potential decrease along a trace.

    Checks, for every step,

        Phi^k - Phi^{k+1} >= lam/16 ||dx||^2 + 1/(8 alpha) ||y^k - y_+^k||^2
                             + 4r/(7 beta) ||dz||^2 - 28 r beta ||x_r*(z^k) - x_r(y_+^k, z^k)||^2

    and counts steps where ``Phi`` increases while the GS residual is above
    ``monotone_until``; with ``require_monotone`` any such step fails the check.
    """

    pairs = _consecutive(trace)
    r, alpha, beta = params.r, params.alpha, params.beta
    potentials = [evaluate_potential(problem, s.x, s.y, s.z, r, tol) for s in [pairs[0][0]] + [b for _, b in pairs]]
    ratios: list[float] = []
    increases = 0
    for index, (state, following) in enumerate(pairs):
        y_plus = dual_prox_step(problem, state.y, state.z, r, alpha, tol)
        x_star = compute_x_r_star(problem, state.z, r, tol)
        xr_plus = compute_x_r(problem, y_plus.x, state.z, r, tol)
        dy = max(float(np.linalg.norm(state.y - y_plus.x)) - y_plus.certificate, 0.0)
        gap = (
            float(np.linalg.norm(x_star.x - xr_plus.x))
            + x_star.certificate
            + xr_plus.certificate
            + params.sigma2 * y_plus.certificate
        )
        required = (
            params.lam / 16.0 * float(np.sum((state.x - following.x) ** 2))
            + dy**2 / (8.0 * alpha)
            + 4.0 * r / (7.0 * beta) * float(np.sum((state.z - following.z) ** 2))
            - 28.0 * r * beta * gap**2
        )
        before, after = potentials[index], potentials[index + 1]
        slack = (
            before.slack
            + after.slack
            + 10.0 * following.certificate
            + RELATIVE_ROUNDING * max(1.0, abs(before.phi), abs(after.phi))
        )
        decrease = before.phi - after.phi
        ratios.append(inequality_ratio(required, decrease + slack))
        if decrease < -slack:
            gs = gs_residuals(problem, state.x, state.y, r, tol)
            if max(gs.gs_primal, gs.gs_dual) > monotone_until:
                increases += 1
    if require_monotone:
        ratios.append(inequality_ratio(float(increases), 0.0))
    return _report(
        "sufficient_decrease",
        ratios,
        potential_first=potentials[0].phi,
        potential_last=potentials[-1].phi,
        monotone_violations=increases,
    )


def sample_dual_pairs(
    problem: CompositeMinimaxProblem, count: int, seed: int = 0, radius: float = 1.0
) -> list[tuple[Vector, Vector]]:
    """Seeded ``(y, z)`` pairs with ``y`` in ``Y`` and ``z`` in ``X``."""

    rng = np.random.default_rng(seed)
    return [(sample_point(problem.set_y, rng, radius), sample_point(problem.set_x, rng, radius)) for _ in range(count)]


def check_dual_error_bound(
    problem: CompositeMinimaxProblem,
    sample_points: Sequence[tuple[Vector, Vector]],
    params: DerivedConstants,
    tol: float = 1e-10,
    form: Literal["auto", "omega", "kappa"] = "auto",
) -> CheckReport:
    """Dual error bound on sampled ``(y, z)``.

    ``omega`` form: ``||x_r*(z) - x_r(y_+(z), z)|| <= omega ||y - y_+(z)||^{1/(2 theta)}``;
    ``kappa`` form: ``||x_r*(z) - x_r(y_+(z), z)||^2 <= kappa ||y - y_+(z)||``.

    Raises:
        ParameterError: If the chosen form lacks its constants.
    """

    constants = problem.constants
    if form == "auto":
        form = "omega" if constants.has_kl else "kappa"
    theta = constants.kl_exponent
    if form == "omega":
        if theta is None or constants.kl_modulus is None:
            raise ParameterError("the omega form needs kl_exponent and kl_modulus")
        omega = kl_dual_modulus(params.r, params.alpha, params.lipschitz, theta, constants.kl_modulus)
    elif params.kappa is None:
        raise ParameterError("the kappa form needs a finite diam_y")
    ratios = []
    for y, z in sample_points:
        y_plus = dual_prox_step(problem, y, z, params.r, params.alpha, tol)
        x_star = compute_x_r_star(problem, z, params.r, tol)
        xr_plus = compute_x_r(problem, y_plus.x, z, params.r, tol)
        certs = x_star.certificate + xr_plus.certificate + params.sigma2 * y_plus.certificate
        lhs = max(float(np.linalg.norm(x_star.x - xr_plus.x)) - certs, 0.0)
        step = float(np.linalg.norm(problem.y_vector(y) - y_plus.x)) + y_plus.certificate
        if form == "omega":
            assert theta is not None
            ratios.append(inequality_ratio(lhs, omega * step ** (1.0 / (2.0 * theta)) + ROUNDING_FLOOR))
        else:
            assert params.kappa is not None
            ratios.append(inequality_ratio(lhs**2, params.kappa * step + ROUNDING_FLOOR))
    return _report("dual_error_bound", ratios, form=form)


def check_solution_lipschitz(
    problem: CompositeMinimaxProblem,
    params: DerivedConstants,
    samples: int = 20,
    seed: int = 0,
    tol: float = 1e-10,
    radius: float = 1.0,
) -> CheckReport:
    """``x_r`` is ``sigma1``-Lipschitz in ``z`` and ``sigma2``-Lipschitz in ``y`` on sampled pairs."""

    rng = np.random.default_rng(seed)
    r = params.r
    ratios = []
    for _ in range(samples):
        y, y2 = sample_point(problem.set_y, rng, radius), sample_point(problem.set_y, rng, radius)
        z, z2 = sample_point(problem.set_x, rng, radius), sample_point(problem.set_x, rng, radius)
        base = compute_x_r(problem, y, z, r, tol)
        moved_z = compute_x_r(problem, y, z2, r, tol)
        moved_y = compute_x_r(problem, y2, z, r, tol)
        lhs_z = float(np.linalg.norm(base.x - moved_z.x)) - base.certificate - moved_z.certificate
        lhs_y = float(np.linalg.norm(base.x - moved_y.x)) - base.certificate - moved_y.certificate
        ratios.append(inequality_ratio(lhs_z, params.sigma1 * float(np.linalg.norm(z - z2)) + ROUNDING_FLOOR))
        ratios.append(inequality_ratio(lhs_y, params.sigma2 * float(np.linalg.norm(y - y2)) + ROUNDING_FLOOR))
    return _report("solution_lipschitz", ratios, sigma1=params.sigma1, sigma2=params.sigma2)


def check_model_bounds(
    problem: CompositeMinimaxProblem, samples: int = 50, seed: int = 0, radius: float = 1.0
) -> CheckReport:
    """``|F(x, y) - h_y(c_y(xb) + J (x - xb))| <= (L_h L_c / 2) ||x - xb||^2`` on sampled points.

    A failure means the declared ``L_h`` or ``L_c`` is wrong, not that a solver is.
    """

    rng = np.random.default_rng(seed)
    modulus = problem.constants.lipschitz_h * problem.constants.lipschitz_c
    ratios = []
    for _ in range(samples):
        x, anchor = sample_point(problem.set_x, rng, radius), sample_point(problem.set_x, rng, radius)
        y = sample_point(problem.set_y, rng, radius)
        model = problem.h_eval(problem.c_eval(anchor, y) + jacobian_matrix(problem, anchor, y) @ (x - anchor), y)
        value = evaluate_F(problem, x, y)
        bound = 0.5 * modulus * float(np.sum((x - anchor) ** 2))
        ratios.append(inequality_ratio(abs(value - model), bound + RELATIVE_ROUNDING * max(1.0, abs(value))))
    return _report("model_bounds", ratios, modulus=modulus)


def check_oracle_gate(
    problem: CompositeMinimaxProblem,
    samples: int = 50,
    seed: int = 0,
    radius: float = 1.0,
    *,
    fd_tol: float = 1e-4,
    adjoint_tol: float = 1e-10,
    grad_y_tol: float = 1e-5,
) -> CheckReport:
    """Finite-difference Jacobian, adjoint identity and ``grad_y`` agreement as one report."""

    result = check_oracles(problem, samples, seed, radius)
    ratios = [
        inequality_ratio(result.jacobian_rel_error, fd_tol),
        inequality_ratio(result.adjoint_error, adjoint_tol),
        inequality_ratio(result.grad_y_rel_error, grad_y_tol),
        inequality_ratio(result.convexity_violation, 1e-10),
        inequality_ratio(result.lipschitz_ratio, 1.0 + RELATIVE_ROUNDING),
    ]
    return _report(
        "oracle_gate",
        ratios,
        jacobian_rel_error=result.jacobian_rel_error,
        adjoint_error=result.adjoint_error,
        grad_y_rel_error=result.grad_y_rel_error,
    )


def check_vertex_maximum(
    problem: CompositeMinimaxProblem,
    objective: Callable[[Vector], float],
    samples: int = 100,
    seed: int = 0,
    radius: float = 1.0,
    tol: float = 1e-12,
) -> CheckReport:
    """``objective(x)`` equals ``max_i F(x, e_i)`` over the vertices of a simplex ``Y``.

    Raises:
        ParameterError: If ``Y`` is not a simplex.
    """

    if not isinstance(problem.set_y, Simplex):
        raise ParameterError("the vertex maximum needs a simplex Y")
    rng = np.random.default_rng(seed)
    vertices = np.eye(problem.dim_y)
    ratios = []
    for _ in range(samples):
        x = sample_point(problem.set_x, rng, radius)
        value = objective(x)
        best = max(evaluate_F(problem, x, vertex) for vertex in vertices)
        ratios.append(inequality_ratio(abs(value - best), tol * max(1.0, abs(best))))
    return _report("vertex_maximum", ratios)


def gs_certificate(params: DerivedConstants, dx: float, dy: float, dz: float) -> float:
    """GS bound ``rho_conv * max(dx, dy, dz)`` for ``(x^{k+1}, y^{k+1})``.

    ``dx = ||x^{k+1} - x^k||``, ``dy = ||y_+^k(z^k) - y^k||`` and ``dz = ||x^{k+1} - z^k||``.
    """

    return params.rho_conv * max(dx, dy, dz)


def check_gs_certificate(
    problem: CompositeMinimaxProblem,
    trace: IterateTrace,
    params: DerivedConstants,
    tol: float = 1e-10,
) -> CheckReport:
    """The measured GS residual of every iterate stays below :func:`gs_certificate`."""

    ratios = []
    for state, following in _consecutive(trace):
        y_plus = dual_prox_step(problem, state.y, state.z, params.r, params.alpha, tol)
        bound = gs_certificate(
            params,
            float(np.linalg.norm(following.x - state.x)),
            float(np.linalg.norm(y_plus.x - state.y)) + y_plus.certificate,
            float(np.linalg.norm(following.x - state.z)),
        )
        slack = params.rho_conv * (params.zeta + 1.0) * following.certificate + ROUNDING_FLOOR
        gs = gs_residuals(problem, following.x, following.y, params.r, tol)
        ratios.append(inequality_ratio(max(gs.gs_primal - gs.certificate, gs.gs_dual), bound + slack))
    return _report("gs_certificate", ratios, rho_conv=params.rho_conv)


def conversion_bound(params: DerivedConstants, eps: float, theta: float | None = None) -> float:
    """A-priori OS residual of an ``eps``-GS point.

    With ``u = eps (1 + alpha L / r)``: ``sqrt(kappa u) + sigma2 u + eps / r`` for
    general concave problems and ``omega u^{1/(2 theta)} + sigma2 u + eps / r`` under KŁ.

    Raises:
        ParameterError: If the needed ``kappa`` or ``omega`` is undefined.
    """

    u = eps * (1.0 + params.alpha * params.lipschitz / params.r)
    tail = params.sigma2 * u + eps / params.r
    if theta is not None:
        if params.omega is None:
            raise ParameterError("the KŁ conversion bound needs omega")
        return params.omega * u ** (1.0 / (2.0 * theta)) + tail
    if params.kappa is None:
        raise ParameterError("the general conversion bound needs a finite diam_y")
    return math.sqrt(params.kappa * u) + tail


def segment_points(
    problem: CompositeMinimaxProblem,
    anchor: tuple[Vector, Vector],
    far: tuple[Vector, Vector],
    r: float,
    count: int = 16,
    min_t: float = 1e-5,
    tol: float = 1e-10,
) -> list[GsPoint]:
    """Points ``anchor + t (far - anchor)`` for log-spaced ``t`` in ``[min_t, 1]`` with their GS residuals."""

    ax, ay = problem.x_vector(anchor[0]), problem.y_vector(anchor[1])
    fx, fy = problem.x_vector(far[0]), problem.y_vector(far[1])
    points = []
    for t in np.logspace(0.0, math.log10(min_t), count):
        x = problem.set_x.project(ax + t * (fx - ax))
        y = problem.set_y.project(ay + t * (fy - ay))
        gs = gs_residuals(problem, x, y, r, tol)
        points.append(GsPoint(x, y, max(gs.gs_primal, gs.gs_dual), gs.certificate))
    return points


def harvest_trace_points(
    problem: CompositeMinimaxProblem, trace: IterateTrace, r: float, count: int = 16, tol: float = 1e-10
) -> list[GsPoint]:
    """Segment points between a trace's first state and its best iterate."""

    if not trace.states:
        raise ParameterError("harvesting needs a trace recorded with keep_states=True")
    best_k = trace.best_record().k
    best = next(s for s in trace.states if s.k == best_k)
    first = trace.states[0]
    return segment_points(problem, (best.x, best.y), (first.x, first.y), r, count, tol=tol)


def check_gs_os_conversion(
    problem: CompositeMinimaxProblem,
    approximate_gs_points: Sequence[GsPoint],
    params: DerivedConstants,
    *,
    harvested: Sequence[GsPoint] = (),
    tolerance: float = 0.1,
    tol: float = 1e-10,
    min_decades: float = 3.0,
) -> CheckReport:
    """OS residuals of approximate GS points against the conversion exponent and bound.

    Fits ``log os`` against ``log eps`` and requires the slope to reach the
    exponent ``min(1, 1/(2 theta))`` (``1/2`` without KŁ data) minus
    ``tolerance``; every point must also respect :func:`conversion_bound`, and
    exact GS points must have a zero OS residual up to its certificate.
    ``harvested`` points, typically from :func:`harvest_trace_points`, are held
    to the same bounds but stay out of the exponent fit.

    Raises:
        ParameterError: If the positive residuals span fewer than ``min_decades`` decades.
    """

    theta = problem.constants.kl_exponent
    exponent = min(1.0, 1.0 / (2.0 * theta)) if theta is not None else 0.5
    ratios: list[float] = []
    eps_values: list[float] = []
    os_values: list[float] = []

    def bound_ratio(point: GsPoint) -> tuple[float, float | None]:
        result = os_residual(problem, point.x, params.r, tol)
        if point.eps <= EXACT_GS:
            return inequality_ratio(result.residual, result.certificate + point.certificate + ROUNDING_FLOOR), None
        bound = conversion_bound(params, point.eps + point.certificate, theta)
        return inequality_ratio(result.residual - result.certificate, bound), result.residual

    for point in approximate_gs_points:
        ratio, residual = bound_ratio(point)
        ratios.append(ratio)
        if residual is not None:
            eps_values.append(point.eps)
            os_values.append(residual)
    ratios.extend(bound_ratio(point)[0] for point in harvested)
    positive = [e for e, o in zip(eps_values, os_values, strict=True) if o > EXACT_GS]
    if not positive or math.log10(max(positive) / min(positive)) < min_decades:
        raise ParameterError(f"GS residuals must span at least {min_decades:g} decades")
    slope, intercept = loglog_fit(eps_values, os_values)
    ratios.append(inequality_ratio(exponent - tolerance, slope))
    return _report(
        "gs_os_conversion",
        ratios,
        fitted_exponent=slope,
        fitted_constant=math.exp(intercept),
        theory_exponent=exponent,
        harvested=len(harvested),
    )


def _rate(problem: CompositeMinimaxProblem, regime: Regime) -> float:
    theta = problem.constants.kl_exponent
    if regime == "general" or theta is None:
        return 0.25
    return 0.5 if theta <= 0.5 else 1.0 / (4.0 * theta)


def check_rate_slope(
    problem: CompositeMinimaxProblem,
    regime: Regime,
    horizons: Sequence[int],
    start: SolverState,
    *,
    stride: int = 10,
    tolerance: float = 0.1,
    tol: float = 1e-10,
    inner: InnerSolverConfig | None = None,
    params_for: Callable[[int], DerivedConstants] | None = None,
    workers: WorkerSettings | None = None,
) -> CheckReport:
    """Log-log slope of the best-iterate GS residual against the horizon.

    A sanity check on the worst-case rate (``1/4`` general, ``1/2`` for KŁ
    exponents up to ``1/2``): observed decay may be faster, never meaningfully slower.
    """

    def one_run(horizon: int) -> Callable[[], float]:
        def job() -> float:
            params = params_for(horizon) if params_for else derive_parameters(problem.constants, regime, horizon)
            opts = TraceOptions(stride=stride, gs=True, tol=tol, keep_states=False)
            trace, _ = run(problem, params, horizon, start, inner, opts)
            gs = trace.best_record().gs
            return 0.0 if gs is None else gs

        return job

    residuals = gather_runs([one_run(k) for k in horizons], workers)
    rate = _rate(problem, regime)
    threshold = -(rate - tolerance)
    slope, _ = loglog_fit([float(k) for k in horizons], residuals)
    details = {"horizons": list(horizons), "residuals": residuals, "slope": slope, "threshold": threshold}
    if math.isnan(slope):
        # Fewer than two positive residuals: the runs reached exact stationarity.
        return _report("rate_slope", [0.0], tolerance=0.0, vacuous=True, **details)
    return _report("rate_slope", [inequality_ratio(slope, threshold)], **details)
