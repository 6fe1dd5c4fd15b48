"""Strongly convex prox-linear subproblem solvers.

Each outer step minimizes over ``x in X``

    h_y(c0 + J (x - x_k)) + (lam/2) ||x - x_k||^2 + (r/2) ||x - z_k||^2

where ``c0 = c_y(x_k)`` and ``J`` is the Jacobian of ``c_y`` at ``x_k``. The
objective is ``(lam + r)``-strongly convex, so every method returns a
certificate: a proven bound on the distance to the exact minimizer.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np

from .convex_sets import Box, WholeSpace
from .errors import NonconvergedInner, ParameterError, Unsupported
from .problem_model import CompositeMinimaxProblem
from .types import Matrix, Vector

LOGGER = logging.getLogger(__name__)

Method = Literal[
    "auto",
    "closed_form",
    "projected_subgradient_averaging",
    "accelerated_projected_gradient",
    "dual_projected_gradient",
]
NonconvergencePolicy = Literal["raise", "warn"]

_CHECK_EVERY = 10
_POWER_ITERS = 30


@dataclass(frozen=True)
class InnerSolverConfig:
    """Inner solver selection and accuracy.

    Attributes:
        method: Solver; ``auto`` picks the most accurate method the problem supports.
        max_iters: Iteration budget per solve.
        target_residual: Required certificate ``eps_inner``.
        adaptive: Scale the target with progress, ``min(target, 1e-3 ||x_k - z_k|| + 1e-10)``.
        floor: Lower bound on the adaptive target.
        on_nonconvergence: ``raise`` a :class:`NonconvergedInner` or ``warn`` and keep the iterate.
    """

    method: Method = "auto"
    max_iters: int = 5000
    target_residual: float = 1e-8
    adaptive: bool = False
    floor: float = 1e-12
    on_nonconvergence: NonconvergencePolicy = "raise"

    def __post_init__(self) -> None:
        if not self.target_residual > 0:
            raise ParameterError("target_residual must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")

    def target_for(self, x_k: Vector, z_k: Vector) -> float:
        if not self.adaptive:
            return self.target_residual
        scaled = 1e-3 * float(np.linalg.norm(x_k - z_k)) + 1e-10
        return max(self.floor, min(self.target_residual, scaled))


@dataclass(eq=False)
class SubproblemSpec:
    """One prox-linear subproblem, with the anchor evaluation cached.

    The inner solvers only touch ``c`` through ``c0`` and Jacobian products at the
    anchor; a dense Jacobian is used when the problem provides one.
    """

    x_k: Vector
    y_k: Vector
    z_k: Vector
    lam: float
    r: float
    c0: Vector
    jacobian: Matrix | None = None
    _norm_sq: float | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        problem: CompositeMinimaxProblem,
        x_k: Vector,
        y_k: Vector,
        z_k: Vector,
        lam: float,
        r: float,
    ) -> SubproblemSpec:
        if not (lam > 0 and r > 0):
            raise ParameterError("lam and r must be positive")
        x = problem.x_vector(x_k)
        y = problem.y_vector(y_k)
        jac = None
        if problem.c_jacobian is not None:
            jac = np.asarray(problem.c_jacobian(x, y), dtype=np.float64)
        return cls(x, y, problem.x_vector(z_k), float(lam), float(r), problem.c_eval(x, y), jac)

    @property
    def mu(self) -> float:
        """Strong convexity modulus ``lam + r``."""

        return self.lam + self.r

    @property
    def center(self) -> Vector:
        """Minimizer of the combined quadratic ``(lam x_k + r z_k) / (lam + r)``."""

        return (self.lam * self.x_k + self.r * self.z_k) / self.mu

    def apply_j(self, problem: CompositeMinimaxProblem, d: Vector) -> Vector:
        if self.jacobian is not None:
            return self.jacobian @ d
        return problem.c_jvp(self.x_k, self.y_k, d)

    def apply_jt(self, problem: CompositeMinimaxProblem, u: Vector) -> Vector:
        if self.jacobian is not None:
            return self.jacobian.T @ u
        return problem.c_vjp(self.x_k, self.y_k, u)

    def linearization(self, problem: CompositeMinimaxProblem, x: Vector) -> Vector:
        return self.c0 + self.apply_j(problem, x - self.x_k)

    def quadratic(self, x: Vector) -> float:
        return 0.5 * self.lam * float(np.sum((x - self.x_k) ** 2)) + 0.5 * self.r * float(np.sum((x - self.z_k) ** 2))

    def jacobian_norm_sq(self, problem: CompositeMinimaxProblem) -> float:
        """Upper estimate of ``||J||^2`` (exact for dense Jacobians, power iteration otherwise)."""

        if self._norm_sq is None:
            if self.jacobian is not None:
                self._norm_sq = float(np.linalg.norm(self.jacobian, 2) ** 2)
            else:
                v = np.ones(self.x_k.shape[0]) / math.sqrt(self.x_k.shape[0])
                estimate = 0.0
                for _ in range(_POWER_ITERS):
                    w = self.apply_jt(problem, self.apply_j(problem, v))
                    estimate = float(np.linalg.norm(w))
                    if estimate == 0.0:
                        break
                    v = w / estimate
                self._norm_sq = 1.1 * estimate
        return self._norm_sq


class SubproblemResult(NamedTuple):
    """Solution of one subproblem and its distance certificate."""

    x: Vector
    certificate: float


def model_value(problem: CompositeMinimaxProblem, spec: SubproblemSpec, x: object) -> float:
    """Value of the prox-linear model plus both quadratics at ``x``."""

    xv = problem.x_vector(x)
    return float(problem.h_eval(spec.linearization(problem, xv), spec.y_k)) + spec.quadratic(xv)


def model_subgradient(problem: CompositeMinimaxProblem, spec: SubproblemSpec, x: Vector) -> Vector:
    """A subgradient of the model objective at ``x``."""

    s = problem.h_subgrad(spec.linearization(problem, x), spec.y_k)
    return spec.apply_jt(problem, s) + spec.lam * (x - spec.x_k) + spec.r * (x - spec.z_k)


def select_method(problem: CompositeMinimaxProblem, requested: Method) -> Method:
    """Resolve ``auto`` and check that an explicit method is supported."""

    closed_ok = problem.h_affine and isinstance(problem.set_x, (WholeSpace, Box))
    if requested == "auto":
        if closed_ok:
            return "closed_form"
        if problem.h_dual_project is not None:
            return "dual_projected_gradient"
        if problem.h_smoothness is not None:
            return "accelerated_projected_gradient"
        return "projected_subgradient_averaging"
    if requested == "closed_form" and not closed_ok:
        raise Unsupported("closed_form needs an affine h and X a box or the whole space")
    if requested == "dual_projected_gradient" and problem.h_dual_project is None:
        raise Unsupported("dual_projected_gradient needs the h_dual_project oracle")
    if requested == "accelerated_projected_gradient" and problem.h_smoothness is None:
        raise Unsupported("accelerated_projected_gradient needs h_smoothness")
    return requested


def _closed_form(
    problem: CompositeMinimaxProblem, spec: SubproblemSpec, target: float, max_iters: int
) -> tuple[Vector, float, int]:
    slope = spec.apply_jt(problem, problem.h_subgrad(spec.c0, spec.y_k))
    return problem.set_x.project(spec.center - slope / spec.mu), 0.0, 1


def averaged_subgradient_descent(
    oracle: Callable[[Vector], tuple[float, Vector]],
    project: Callable[[Vector], Vector],
    x0: Vector,
    mu: float,
    target: float,
    max_iters: int,
) -> tuple[Vector, float, int]:
    """Projected subgradient descent with ``t``-weighted averaging on a ``mu``-strongly convex function.

    ``oracle`` returns the value and a subgradient. The certificate bounds the
    distance of the average to the minimizer through the averaged
    strong-convexity minorant ``value + <g, . - x> + mu/2 ||. - x||^2``.
    """

    x = x0.copy()
    weight_sum = 0.0
    const_sum = 0.0
    grad_sum = np.zeros_like(x)
    point_sum = np.zeros_like(x)
    best_x, best_cert = x, math.inf
    for t in range(1, max_iters + 1):
        value, g = oracle(x)
        weight_sum += t
        const_sum += t * (value - float(g @ x) + 0.5 * mu * float(x @ x))
        grad_sum += t * g
        point_sum += t * x
        if t % _CHECK_EVERY == 0 or t == max_iters:
            x_avg = point_sum / weight_sum
            g_avg = grad_sum / weight_sum
            minimizer = project(x_avg - g_avg / mu)
            lower = (
                const_sum / weight_sum
                + float(g_avg @ minimizer)
                - mu * float(x_avg @ minimizer)
                + 0.5 * mu * float(minimizer @ minimizer)
            )
            gap = max(oracle(x_avg)[0] - lower, 0.0)
            cert = math.sqrt(2.0 * gap / mu)
            if cert < best_cert:
                best_x, best_cert = x_avg, cert
            if cert <= target:
                return x_avg, cert, t
        x = project(x - (2.0 / (mu * (t + 1))) * g)
    return best_x, best_cert, max_iters


def _subgradient_averaging(
    problem: CompositeMinimaxProblem, spec: SubproblemSpec, target: float, max_iters: int
) -> tuple[Vector, float, int]:
    def oracle(x: Vector) -> tuple[float, Vector]:
        return model_value(problem, spec, x), model_subgradient(problem, spec, x)

    return averaged_subgradient_descent(oracle, problem.set_x.project, spec.x_k, spec.mu, target, max_iters)


def _accelerated_gradient(
    problem: CompositeMinimaxProblem, spec: SubproblemSpec, target: float, max_iters: int
) -> tuple[Vector, float, int]:
    smooth = float(problem.h_smoothness or 0.0)
    mu = spec.mu
    lip = smooth * spec.jacobian_norm_sq(problem) + mu

    def value_and_grad(x: Vector) -> tuple[float, Vector]:
        lin = spec.linearization(problem, x)
        grad = (
            spec.apply_jt(problem, problem.h_subgrad(lin, spec.y_k))
            + spec.lam * (x - spec.x_k)
            + spec.r * (x - spec.z_k)
        )
        return float(problem.h_eval(lin, spec.y_k)) + spec.quadratic(x), grad

    x = spec.x_k.copy()
    v = x.copy()
    cert = math.inf
    for t in range(1, max_iters + 1):
        fv, gv = value_and_grad(v)
        while True:
            x_next = problem.set_x.project(v - gv / lip)
            step = x_next - v
            if model_value(problem, spec, x_next) <= fv + float(gv @ step) + 0.5 * lip * float(step @ step) + 1e-15 * abs(fv):
                break
            lip *= 2.0
        cert = 2.0 * lip * float(np.linalg.norm(step)) / mu
        if cert <= target:
            return x_next, cert, t
        q = math.sqrt(mu / lip)
        momentum = (1.0 - q) / (1.0 + q)
        v = x_next + momentum * (x_next - x)
        x = x_next
    return x, cert, max_iters


def _dual_gradient(
    problem: CompositeMinimaxProblem, spec: SubproblemSpec, target: float, max_iters: int
) -> tuple[Vector, float, int]:
    project_u = problem.h_dual_project
    assert project_u is not None
    mu = spec.mu
    center = spec.center
    y = spec.y_k

    def primal(u: Vector) -> tuple[Vector, Vector, float]:
        x = problem.set_x.project(center - spec.apply_jt(problem, u) / mu)
        lin = spec.linearization(problem, x)
        dual_value = float(u @ lin) + 0.5 * mu * float(np.sum((x - center) ** 2))
        return x, lin, dual_value

    def gap_of(u: Vector, lin: Vector) -> float:
        if problem.h_fenchel_gap is not None:
            return float(problem.h_fenchel_gap(lin, u, y))
        return float(problem.h_eval(lin, y)) - float(u @ lin)

    lip = max(spec.jacobian_norm_sq(problem) / mu, 1e-12)
    u = project_u(problem.h_subgrad(spec.c0, y), y)
    x, lin, d_u = primal(u)
    best_x, best_cert = x, math.sqrt(2.0 * max(gap_of(u, lin), 0.0) / mu)
    if best_cert <= target:
        return best_x, best_cert, 0
    v, momentum_t = u.copy(), 1.0
    for t in range(1, max_iters + 1):
        _, grad_v, d_v = primal(v)
        while True:
            u_next = project_u(v + grad_v / lip, y)
            step = u_next - v
            x_next, lin_next, d_next = primal(u_next)
            if d_next >= d_v + float(grad_v @ step) - 0.5 * lip * float(step @ step) - 1e-15 * abs(d_v):
                break
            lip *= 2.0
        cert = math.sqrt(2.0 * max(gap_of(u_next, lin_next), 0.0) / mu)
        if cert < best_cert:
            best_x, best_cert = x_next, cert
        if cert <= target:
            return x_next, cert, t
        if d_next < d_u:
            # Function-value restart.
            v, momentum_t = u_next.copy(), 1.0
        else:
            next_t = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum_t**2))
            v = u_next + ((momentum_t - 1.0) / next_t) * (u_next - u)
            momentum_t = next_t
        u, d_u = u_next, d_next
    return best_x, best_cert, max_iters


_SOLVERS: dict[str, Callable[[CompositeMinimaxProblem, SubproblemSpec, float, int], tuple[Vector, float, int]]] = {
    "closed_form": _closed_form,
    "projected_subgradient_averaging": _subgradient_averaging,
    "accelerated_projected_gradient": _accelerated_gradient,
    "dual_projected_gradient": _dual_gradient,
}


def solve_subproblem(
    problem: CompositeMinimaxProblem,
    spec: SubproblemSpec,
    cfg: InnerSolverConfig | None = None,
) -> SubproblemResult:
    """Minimize the prox-linear model over ``X`` to a certified accuracy.

    Returns:
        The approximate minimizer and a proven bound on its distance to the
        exact minimizer.

    Raises:
        NonconvergedInner: If the certificate misses the target after
            ``max_iters`` and the policy is ``raise``.
        Unsupported: If the requested method needs an oracle the problem lacks.
    """

    cfg = cfg or InnerSolverConfig()
    method = select_method(problem, cfg.method)
    target = cfg.target_for(spec.x_k, spec.z_k)
    x, cert, iters = _SOLVERS[method](problem, spec, target, cfg.max_iters)
    if cert > target:
        if cfg.on_nonconvergence == "raise":
            raise NonconvergedInner(cert, target, iters)
        LOGGER.warning("Inner %s solve kept certificate %.3e above target %.3e", method, cert, target)
    LOGGER.debug("Inner %s solve: %d iterations, certificate %.3e", method, iters, cert)
    return SubproblemResult(x, cert)
