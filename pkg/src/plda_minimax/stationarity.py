"""Stationarity measures and the smoothed value functions behind them.

With ``F_r(x, y, z) = F(x, y) + (r/2) ||x - z||^2`` and ``r > L``:

* ``x_r(y, z)`` minimizes ``F_r(., y, z)`` over ``X`` and ``d_r(y, z)`` is the minimum value;
* ``x_r*(z)`` minimizes ``f + (r/2) ||. - z||^2`` over ``X`` and ``p_r(z)`` is the minimum value.

Game stationarity is measured by ``r ||x - x_r(y, x)||`` and the dual
normal-cone residual; optimization stationarity by ``||x_r*(x) - x||``. Every
quantity carries a certificate bounding its numerical error.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .convex_sets import Box, normal_cone_distance
from .errors import NonconvergedInner, ParameterError, Unsupported
from .problem_model import CompositeMinimaxProblem, dual_diameter, evaluate_F, primal_error_modulus, subgradient_x
from .prox_linear import InnerSolverConfig, SubproblemSpec, averaged_subgradient_descent, solve_subproblem
from .types import Vector

LOGGER = logging.getLogger(__name__)

ProxMethod = Literal["auto", "bisection", "dual_ascent", "subgradient"]

_BISECTION_ITERS = 200


class CertifiedPoint(NamedTuple):
    """A computed point and a proven bound on its distance to the exact one."""

    x: Vector
    certificate: float


class GsResiduals(NamedTuple):
    gs_primal: float
    gs_dual: float
    x_r: Vector
    certificate: float


class ProxPoint(NamedTuple):
    """Approximation of ``x_r*(z)`` with value bounds on ``p_r(z)``.

    ``upper`` is ``f(x) + (r/2)||x - z||^2`` (``None`` without an ``f_oracle``);
    ``value_slack`` bounds ``upper - p_r(z)``.
    """

    x: Vector
    certificate: float
    upper: float | None
    value_slack: float


class OsResult(NamedTuple):
    residual: float
    prox: Vector
    certificate: float


class PotentialReport(NamedTuple):
    """``Phi_r = F_r - 2 d_r + 2 p_r`` and its components; ``slack`` bounds the error of ``phi``."""

    phi: float
    f_r: float
    d_r: float
    p_r: float
    slack: float


@dataclass(frozen=True)
class StationarityReport:
    """GS and OS residuals at ``(x, y)`` for the proximal weight ``r``."""

    r: float
    gs_primal: float
    gs_dual: float
    os: float | None
    x_r: Vector
    x_r_star: Vector | None
    gs_certificate: float
    os_certificate: float | None

    @property
    def gs(self) -> float:
        return max(self.gs_primal, self.gs_dual)


def _require_weight(problem: CompositeMinimaxProblem, r: float) -> None:
    if not r > problem.lipschitz:
        raise ParameterError(f"r={r:g} must exceed L={problem.lipschitz:g}")


def smoothed_value(problem: CompositeMinimaxProblem, x: Vector, y: Vector, z: Vector, r: float) -> float:
    """``F_r(x, y, z)``."""

    return evaluate_F(problem, x, y) + 0.5 * r * float(np.sum((x - z) ** 2))


def _value_slack(problem: CompositeMinimaxProblem, x: Vector, y: Vector, z: Vector, r: float, distance: float) -> float:
    # F_r(., y, z) is convex, so F_r(x) - min F_r <= ||xi|| * ||x - argmin|| for xi in dF_r(x).
    if distance == 0.0:
        return 0.0
    xi = subgradient_x(problem, x, y) + r * (x - z)
    return float(np.linalg.norm(xi)) * distance


def compute_x_r(
    problem: CompositeMinimaxProblem,
    y: object,
    z: object,
    r: float,
    tol: float = 1e-10,
    *,
    x0: Vector | None = None,
    max_outer: int = 500,
    inner: InnerSolverConfig | None = None,
) -> CertifiedPoint:
    """Certified ``x_r(y, z)`` by prox-linear steps with ``lam = L`` anchored at the current point.

    Each step contracts towards ``x_r``; the error bound of the step with modulus
    ``zeta(r, L, L)`` turns the step length into the certificate
    ``zeta (||dx|| + c) + c`` where ``c`` is the inner certificate.

    Raises:
        ParameterError: If ``r <= L``.
        NonconvergedInner: If the certificate misses ``tol`` within ``max_outer`` steps.
    """

    _require_weight(problem, r)
    yv = problem.y_vector(y)
    zv = problem.x_vector(z)
    lip = problem.lipschitz
    zeta = primal_error_modulus(r, lip, lip)
    inner = inner or InnerSolverConfig(target_residual=tol / (4.0 * (zeta + 1.0)), on_nonconvergence="warn")
    x = problem.set_x.project(zv if x0 is None else problem.x_vector(x0))
    cert = math.inf
    for _ in range(max_outer):
        spec = SubproblemSpec.build(problem, x, yv, zv, lam=lip, r=r)
        result = solve_subproblem(problem, spec, inner)
        step = float(np.linalg.norm(result.x - x))
        cert = zeta * (step + result.certificate) + result.certificate
        x = result.x
        if cert <= tol:
            return CertifiedPoint(x, cert)
    raise NonconvergedInner(cert, tol, max_outer)


def dual_prox_step(
    problem: CompositeMinimaxProblem,
    y: object,
    z: object,
    r: float,
    alpha: float,
    tol: float = 1e-10,
) -> CertifiedPoint:
    """``y_+(z) = proj_Y(y + alpha grad_y F(x_r(y, z), y))`` with a certificate on the ``y`` result."""

    yv = problem.y_vector(y)
    xr = compute_x_r(problem, yv, z, r, tol)
    y_plus = problem.set_y.project(yv + alpha * problem.grad_y(xr.x, yv))
    return CertifiedPoint(y_plus, alpha * problem.lipschitz * xr.certificate)


def gs_residuals(problem: CompositeMinimaxProblem, x: object, y: object, r: float, tol: float = 1e-10) -> GsResiduals:
    """Game-stationarity residuals at ``(x, y)``.

    ``gs_primal = ||grad_z d_r(y, z)||`` at ``z = x``, i.e. ``r ||x - x_r(y, x)||``;
    ``gs_dual = dist(0, -grad_y F(x, y) + N_Y(y))``. The certificate bounds the
    error of ``gs_primal``; ``gs_dual`` is exact.
    """

    xv = problem.x_vector(x)
    yv = problem.y_vector(y)
    xr = compute_x_r(problem, yv, xv, r, tol, x0=xv)
    primal = r * float(np.linalg.norm(xv - xr.x))
    dual = normal_cone_distance(problem.set_y, yv, problem.grad_y(xv, yv))
    return GsResiduals(primal, dual, xr.x, r * xr.certificate)


def _prox_objective(problem: CompositeMinimaxProblem, z: Vector, r: float, u: Vector) -> tuple[float, Vector]:
    assert problem.f_oracle is not None
    value, witness = problem.f_oracle(u)
    xi = subgradient_x(problem, u, problem.y_vector(witness)) + r * (u - z)
    return float(value) + 0.5 * r * float(np.sum((u - z) ** 2)), xi


def _prox_bisection(problem: CompositeMinimaxProblem, z: Vector, r: float, tol: float) -> tuple[Vector, float]:
    # One-dimensional strongly convex objective: bisect on the sign of a subgradient.
    modulus = r - problem.lipschitz
    _, slope0 = _prox_objective(problem, z, r, z)
    radius = abs(float(slope0[0])) / modulus
    lo, hi = float(z[0]) - radius, float(z[0]) + radius
    if isinstance(problem.set_x, Box):
        # The constrained minimizer is the clipped unconstrained one.
        lo = max(lo, float(problem.set_x.lower[0]))
        hi = min(hi, float(problem.set_x.upper[0]))
        if lo > hi:
            edge = problem.set_x.project(z)
            return edge, 0.0
    for _ in range(_BISECTION_ITERS):
        if hi - lo <= 2.0 * tol:
            break
        mid = 0.5 * (lo + hi)
        slope = float(_prox_objective(problem, z, r, np.array([mid]))[1][0])
        if slope > 0.0:
            hi = mid
        elif slope < 0.0:
            lo = mid
        else:
            lo = hi = mid
    return np.array([0.5 * (lo + hi)]), 0.5 * (hi - lo)


def _prox_dual_ascent(
    problem: CompositeMinimaxProblem, z: Vector, r: float, tol: float, max_iters: int
) -> tuple[Vector, float]:
    # Projected gradient ascent on d_r(., z), whose gradient is grad_y F(x_r(y, z), y).
    lip = problem.lipschitz
    sigma1 = r / (r - lip)
    sigma2 = 2.0 * (r + lip) / (r - lip)
    l_dr = max(sigma1 + r, (sigma2 + 1.0) * lip)
    diam = dual_diameter(problem)
    strong = problem.constants.dual_strong_concavity
    x_tol = tol / (4.0 * (1.0 + sigma2))

    y = problem.set_y.project(np.zeros(problem.dim_y))
    xr = compute_x_r(problem, y, z, r, x_tol)
    best_x, best_cert = xr.x, math.inf
    for _ in range(max_iters):
        y_next = problem.set_y.project(y + problem.grad_y(xr.x, y) / l_dr)
        mapping = l_dr * float(np.linalg.norm(y_next - y)) + lip * xr.certificate
        xr_next = compute_x_r(problem, y_next, z, r, x_tol, x0=xr.x)
        drift = sigma2 * lip * xr.certificate / l_dr
        bounds = [math.sqrt(2.0 * mapping * diam / (r - lip)) + drift]
        if strong is not None:
            bounds.append(2.0 * sigma2 * mapping / strong + drift)
        cert = min(bounds) + xr_next.certificate
        if problem.f_oracle is not None:
            # Weak duality: p_r(z) >= d_r(y_next, z) >= F_r(x) - slack.
            upper, _ = _prox_objective(problem, z, r, xr_next.x)
            lower = smoothed_value(problem, xr_next.x, y_next, z, r) - _value_slack(
                problem, xr_next.x, y_next, z, r, xr_next.certificate
            )
            cert = min(cert, math.sqrt(2.0 * max(upper - lower, 0.0) / (r - lip)))
        y, xr = y_next, xr_next
        if cert < best_cert:
            best_x, best_cert = xr.x, cert
        if cert <= tol:
            break
    return best_x, best_cert


def compute_x_r_star(
    problem: CompositeMinimaxProblem,
    z: object,
    r: float,
    tol: float = 1e-10,
    *,
    method: ProxMethod = "auto",
    max_iters: int = 5000,
    on_nonconvergence: Literal["raise", "warn"] = "raise",
) -> ProxPoint:
    """Certified ``x_r*(z) = argmin_X f + (r/2)||. - z||^2`` and the value ``p_r(z)``.

    ``auto`` uses certified bisection for one-dimensional ``x`` with an
    ``f_oracle`` and dual ascent on ``d_r(., z)`` otherwise. The
    ``subgradient`` method runs averaged subgradient descent on the primal
    objective using the ``f_oracle`` witness.

    Raises:
        Unsupported: If the chosen method needs a missing ``f_oracle``.
        NonconvergedInner: If the certificate misses ``tol`` and the policy is ``raise``.
    """

    _require_weight(problem, r)
    zv = problem.x_vector(z)
    if method == "auto":
        method = "bisection" if problem.dim_x == 1 and problem.f_oracle is not None else "dual_ascent"
    if method in ("bisection", "subgradient") and problem.f_oracle is None:
        raise Unsupported(f"{method} needs an f_oracle")
    if method == "bisection":
        if problem.dim_x != 1:
            raise Unsupported("bisection needs a one-dimensional x")
        x, cert = _prox_bisection(problem, zv, r, tol)
    elif method == "subgradient":
        x, cert, _ = averaged_subgradient_descent(
            lambda u: _prox_objective(problem, zv, r, u),
            problem.set_x.project,
            problem.set_x.project(zv),
            r - problem.lipschitz,
            tol,
            max_iters,
        )
    else:
        x, cert = _prox_dual_ascent(problem, zv, r, tol, max_iters)
    if cert > tol:
        if on_nonconvergence == "raise":
            raise NonconvergedInner(cert, tol, max_iters)
        LOGGER.warning("x_r* via %s kept certificate %.3e above %.3e", method, cert, tol)
    upper: float | None = None
    slack = math.inf
    if problem.f_oracle is not None:
        upper, xi = _prox_objective(problem, zv, r, x)
        slack = float(np.linalg.norm(xi)) * cert
    return ProxPoint(x, cert, upper, slack)


def os_residual(problem: CompositeMinimaxProblem, x: object, r: float, tol: float = 1e-10) -> OsResult:
    """Optimization-stationarity residual ``||x_r*(x) - x||``.

    Raises:
        Unsupported: If the problem has no ``f_oracle``.
    """

    if problem.f_oracle is None:
        raise Unsupported("the OS residual needs an f_oracle")
    xv = problem.x_vector(x)
    prox = compute_x_r_star(problem, xv, r, tol)
    return OsResult(float(np.linalg.norm(prox.x - xv)), prox.x, prox.certificate)


def evaluate_potential(
    problem: CompositeMinimaxProblem,
    x: object,
    y: object,
    z: object,
    r: float,
    tol: float = 1e-10,
) -> PotentialReport:
    """``Phi_r(x, y, z) = F_r - 2 d_r(y, z) + 2 p_r(z)`` with its components.

    Raises:
        Unsupported: If the problem has no ``f_oracle``.
    """

    if problem.f_oracle is None:
        raise Unsupported("the potential needs an f_oracle for p_r")
    xv = problem.x_vector(x)
    yv = problem.y_vector(y)
    zv = problem.x_vector(z)
    f_r = smoothed_value(problem, xv, yv, zv, r)
    xr = compute_x_r(problem, yv, zv, r, tol)
    d_r = smoothed_value(problem, xr.x, yv, zv, r)
    d_slack = _value_slack(problem, xr.x, yv, zv, r, xr.certificate)
    prox = compute_x_r_star(problem, zv, r, tol)
    assert prox.upper is not None
    phi = f_r - 2.0 * d_r + 2.0 * prox.upper
    return PotentialReport(phi, f_r, d_r, prox.upper, 2.0 * d_slack + 2.0 * prox.value_slack)


def stationarity_report(
    problem: CompositeMinimaxProblem,
    x: object,
    y: object,
    r: float,
    tol: float = 1e-10,
    *,
    with_os: bool = True,
) -> StationarityReport:
    """GS residuals, and the OS residual when requested and an ``f_oracle`` exists."""

    gs = gs_residuals(problem, x, y, r, tol)
    os_value: float | None = None
    prox: Vector | None = None
    os_cert: float | None = None
    if with_os and problem.f_oracle is not None:
        result = os_residual(problem, x, r, tol)
        os_value, prox, os_cert = result.residual, result.prox, result.certificate
    return StationarityReport(r, gs.gs_primal, gs.gs_dual, os_value, gs.x_r, prox, gs.certificate, os_cert)
