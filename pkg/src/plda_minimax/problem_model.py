"""Problem abstraction for composite nonconvex-concave minimax problems.

A problem bundles the oracles of ``F(x, y) = h_y(c_y(x))``, the constraint
sets ``X`` and ``Y`` and the user-declared smoothness constants. The derived
algorithm parameters (step sizes, error-bound moduli) are pure functions of
those constants.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator
from contextlib import AbstractContextManager, contextmanager, nullcontext
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np

from .convex_sets import Ball2, Box, ConvexSet, Simplex, WholeSpace, diameter
from .errors import DimensionError, ParameterError
from .types import (
    DualGradient,
    FenchelGap,
    InnerMap,
    JacobianOracle,
    JacobianProduct,
    MaxOracle,
    OuterFunction,
    OuterSubgradient,
    SupportSetProjection,
    Vector,
)
from .utils import as_vector

LOGGER = logging.getLogger(__name__)

Regime = Literal["general", "kl"]


@dataclass(frozen=True)
class ProblemConstants:
    """User-declared smoothness data of a problem.

    Attributes:
        lipschitz_h: Lipschitz modulus of ``h_y`` in ``z``.
        lipschitz_c: Lipschitz modulus of the Jacobian of ``c_y``.
        kl_exponent: Optional KŁ exponent ``theta`` of the dual function.
        kl_modulus: Optional KŁ modulus ``mu``; present exactly when ``kl_exponent`` is.
        diam_y: Diameter of ``Y``.
        lipschitz_override: Replaces ``lipschitz_h * lipschitz_c`` when the joint
            Lipschitz constant of ``grad_y F`` is larger than that product.
        dual_strong_concavity: Optional modulus of strong concavity of ``F(x, .)``.
    """

    lipschitz_h: float
    lipschitz_c: float
    kl_exponent: float | None = None
    kl_modulus: float | None = None
    diam_y: float = math.inf
    lipschitz_override: float | None = None
    dual_strong_concavity: float | None = None

    def __post_init__(self) -> None:
        if not (self.lipschitz_h > 0 and self.lipschitz_c > 0):
            raise ParameterError("lipschitz_h and lipschitz_c must be positive")
        if (self.kl_exponent is None) != (self.kl_modulus is None):
            raise ParameterError("kl_exponent and kl_modulus must be given together")
        if self.kl_exponent is not None and not 0 < self.kl_exponent < 1:
            raise ParameterError("kl_exponent must lie in (0, 1)")
        if self.kl_modulus is not None and not self.kl_modulus > 0:
            raise ParameterError("kl_modulus must be positive")
        if self.lipschitz_override is not None and not self.lipschitz_override > 0:
            raise ParameterError("lipschitz_override must be positive")

    @property
    def lipschitz(self) -> float:
        """The constant ``L`` used by every parameter formula."""

        if self.lipschitz_override is not None:
            return float(self.lipschitz_override)
        return self.lipschitz_h * self.lipschitz_c

    @property
    def has_kl(self) -> bool:
        return self.kl_exponent is not None


@dataclass(frozen=True, eq=False)
class CompositeMinimaxProblem:
    """Oracle bundle for ``min_{x in X} max_{y in Y} h_y(c_y(x))``.

    The optional oracles unlock faster inner solvers (``h_dual_project``,
    ``h_fenchel_gap``, ``c_jacobian``, ``h_affine``, ``h_smoothness``) or the
    optimization-stationarity diagnostics (``f_oracle``).
    """

    dim_x: int
    dim_y: int
    dim_z: int
    c_eval: InnerMap
    c_jvp: JacobianProduct
    c_vjp: JacobianProduct
    h_eval: OuterFunction
    h_subgrad: OuterSubgradient
    grad_y: DualGradient
    set_x: ConvexSet
    set_y: ConvexSet
    constants: ProblemConstants
    f_oracle: MaxOracle | None = None
    name: str = "problem"
    h_affine: bool = False
    h_smoothness: float | None = None
    h_dual_project: SupportSetProjection | None = None
    h_fenchel_gap: FenchelGap | None = None
    c_jacobian: JacobianOracle | None = None
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.set_x.dim != self.dim_x:
            raise DimensionError(f"set_x has dimension {self.set_x.dim}, expected {self.dim_x}")
        if self.set_y.dim != self.dim_y:
            raise DimensionError(f"set_y has dimension {self.set_y.dim}, expected {self.dim_y}")
        if isinstance(self.set_y, WholeSpace):
            raise ParameterError("set_y must be compact")

    @property
    def lipschitz(self) -> float:
        return self.constants.lipschitz

    def x_vector(self, x: object) -> Vector:
        return as_vector(x, self.dim_x, "x")

    def y_vector(self, y: object) -> Vector:
        return as_vector(y, self.dim_y, "y")


@dataclass(frozen=True)
class DerivedConstants:
    """Algorithm parameters and every constant of the convergence analysis.

    Attributes:
        r: Proximal weight of the smoothing term.
        lam: Weight of the prox-linear term.
        alpha: Dual step size.
        beta: Averaging weight of the auxiliary sequence.
        zeta: Primal error-bound modulus.
        sigma1: Lipschitz modulus of ``x_r(y, .)``.
        sigma2: Lipschitz modulus of ``x_r(., z)``.
        eta: Dual step bound ``alpha * L * zeta``.
        l_dr: Lipschitz modulus of ``grad d_r``.
        omega: KŁ dual error-bound modulus (KŁ problems only).
        kappa: General-concave dual error-bound modulus (finite ``diam_y`` only).
        rho_conv: Displacement-to-stationarity conversion factor.
    """

    lipschitz: float
    r: float
    lam: float
    alpha: float
    beta: float
    zeta: float
    sigma1: float
    sigma2: float
    eta: float
    l_dr: float
    omega: float | None
    kappa: float | None
    rho_conv: float
    regime: Regime = "general"
    kl_exponent: float | None = None
    horizon: int | None = None
    forced: bool = False

    def as_dict(self) -> dict[str, object]:
        """Plain mapping for run summaries."""

        return {
            "L": self.lipschitz,
            "r": self.r,
            "lambda": self.lam,
            "alpha": self.alpha,
            "beta": self.beta,
            "zeta": self.zeta,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "eta": self.eta,
            "L_dr": self.l_dr,
            "omega": self.omega,
            "kappa": self.kappa,
            "rho_conv": self.rho_conv,
            "regime": self.regime,
            "theta": self.kl_exponent,
            "horizon": self.horizon,
            "forced": self.forced,
        }


def primal_error_modulus(r: float, lam: float, lipschitz: float) -> float:
    """``zeta`` of the primal error bound ``||x+ - x_r|| <= zeta ||x - x+||``."""

    inv = 1.0 / (lam + lipschitz)
    return ((2.0 / (r - lipschitz) + inv) / inv) * (math.sqrt(2.0 * lipschitz / (lam + lipschitz)) + 1.0)


def kl_dual_modulus(r: float, alpha: float, lipschitz: float, theta: float, mu: float) -> float:
    """``omega`` of the KŁ dual error bound."""

    sigma2 = 2.0 * (r + lipschitz) / (r - lipschitz)
    base = (1.0 + alpha * lipschitz * (1.0 + sigma2)) / (alpha * mu)
    return math.sqrt(2.0) / math.sqrt(r - lipschitz) * base ** (1.0 / (2.0 * theta))


def _beta_cap(r: float, alpha: float, lipschitz: float) -> float:
    return min(1.0 / 28.0, (r - lipschitz) ** 2 / (32.0 * alpha * r * (r + lipschitz) ** 2))


def _alpha_cap(lipschitz: float, zeta: float) -> float:
    return min(1.0 / (10.0 * lipschitz), 1.0 / (4.0 * lipschitz * zeta**2))


def _assemble(
    constants: ProblemConstants,
    r: float,
    lam: float,
    alpha: float,
    beta: float,
    regime: Regime,
    horizon: int | None,
    forced: bool,
) -> DerivedConstants:
    lip = constants.lipschitz
    if r <= lip:
        # Forced runs below the weak-convexity modulus: the analysis constants do not exist.
        nan = math.nan
        return DerivedConstants(
            lip, r, lam, alpha, beta, nan, nan, nan, nan, nan, None, None, nan, regime, None, horizon, forced
        )
    zeta = primal_error_modulus(r, lam, lip)
    sigma1 = r / (r - lip)
    sigma2 = 2.0 * (r + lip) / (r - lip)
    eta = alpha * lip * zeta
    l_dr = max(sigma1 + r, (sigma2 + 1.0) * lip)
    omega = None
    if constants.kl_exponent is not None and constants.kl_modulus is not None:
        omega = kl_dual_modulus(r, alpha, lip, constants.kl_exponent, constants.kl_modulus)
    kappa = None
    if math.isfinite(constants.diam_y):
        kappa = (1.0 + alpha * lip * sigma2 + alpha * lip) / (alpha * (r - lip)) * constants.diam_y
    # The dual term keeps L: the residual at y^{k+1} also moves with grad_y F between iterates.
    rho_conv = max((1.0 + eta) * (1.0 / alpha + lip), r * (zeta + sigma2 * (eta + 1.0) + sigma1))
    return DerivedConstants(
        lipschitz=lip,
        r=r,
        lam=lam,
        alpha=alpha,
        beta=beta,
        zeta=zeta,
        sigma1=sigma1,
        sigma2=sigma2,
        eta=eta,
        l_dr=l_dr,
        omega=omega,
        kappa=kappa,
        rho_conv=rho_conv,
        regime=regime,
        kl_exponent=constants.kl_exponent if regime == "kl" else None,
        horizon=horizon,
        forced=forced,
    )


def beta_schedule(constants: ProblemConstants, regime: Regime, horizon: int, alpha: float, r: float) -> float:
    """The horizon-dependent cap on ``beta`` for the chosen regime.

    Raises:
        ParameterError: If the KŁ regime is requested without KŁ data, or the
            small-exponent schedule needs an infinite diameter.
    """

    if regime == "general":
        return float(horizon) ** -0.5
    theta, mu = constants.kl_exponent, constants.kl_modulus
    if theta is None or mu is None:
        raise ParameterError("regime 'kl' requires kl_exponent and kl_modulus")
    if theta > 0.5:
        return float(horizon) ** (-(2.0 * theta - 1.0) / (2.0 * theta))
    exponent = (2.0 * theta - 1.0) / theta
    if exponent != 0.0 and not math.isfinite(constants.diam_y):
        raise ParameterError("the KŁ schedule for theta < 1/2 needs a finite diam_y")
    omega = kl_dual_modulus(r, alpha, constants.lipschitz, theta, mu)
    scale = constants.diam_y**exponent if exponent != 0.0 else 1.0
    return scale / (448.0 * alpha * r * omega**2)


def derive_parameters(constants: ProblemConstants, regime: Regime, horizon: int) -> DerivedConstants:
    """Theory parameters ``r = 3L, lam = L`` and the resulting step sizes.

    Order of computation: ``(r, lam) -> zeta -> alpha -> omega -> beta``.

    Raises:
        ParameterError: On a non-positive horizon, missing KŁ data for
            ``regime='kl'`` or an infinite diameter where the schedule needs it.
    """

    if horizon < 1:
        raise ParameterError("horizon K must be >= 1")
    if regime not in ("general", "kl"):
        raise ParameterError(f"unknown regime {regime!r}")
    lip = constants.lipschitz
    r = 3.0 * lip
    lam = lip
    zeta = primal_error_modulus(r, lam, lip)
    alpha = _alpha_cap(lip, zeta)
    beta = min(_beta_cap(r, alpha, lip), beta_schedule(constants, regime, horizon, alpha, r))
    derived = _assemble(constants, r, lam, alpha, beta, regime, horizon, forced=False)
    LOGGER.debug("Derived parameters %s", derived.as_dict())
    return derived


def validate_parameters(constants: ProblemConstants, r: float, lam: float, alpha: float, beta: float) -> list[str]:
    """Return human readable violations of the convergence-theory ranges."""

    lip = constants.lipschitz
    violations: list[str] = []
    if r < 3.0 * lip:
        violations.append(f"r={r:g} < 3L={3.0 * lip:g}")
    if lam < lip:
        violations.append(f"lambda={lam:g} < L={lip:g}")
    if r > lip:
        zeta = primal_error_modulus(r, lam, lip)
        if alpha > _alpha_cap(lip, zeta):
            violations.append(f"alpha={alpha:g} > {_alpha_cap(lip, zeta):g}")
        if beta > _beta_cap(r, alpha, lip):
            violations.append(f"beta={beta:g} > {_beta_cap(r, alpha, lip):g}")
    return violations


def explicit_parameters(
    constants: ProblemConstants,
    *,
    r: float,
    lam: float,
    alpha: float,
    beta: float,
    force: bool = False,
    regime: Regime = "general",
) -> DerivedConstants:
    """Build :class:`DerivedConstants` from user-chosen step sizes.

    Values outside the theory ranges are rejected unless ``force`` is set, in
    which case a warning is logged. ``0 < beta < 1`` is always required; a forced
    ``r <= L`` leaves every analysis constant NaN, so the diagnostics that need
    ``x_r`` are unavailable for such runs.

    Raises:
        ParameterError: On invalid values.
    """

    lip = constants.lipschitz
    if not r > lip and not force:
        raise ParameterError(f"r must exceed L={lip:g}")
    if not (r > 0 and lam > 0 and alpha > 0 and 0 < beta < 1):
        raise ParameterError("r, lambda and alpha must be positive and beta must lie in (0, 1)")
    violations = validate_parameters(constants, r, lam, alpha, beta)
    if violations and not force:
        raise ParameterError("parameters violate the convergence theory: " + "; ".join(violations))
    if violations:
        LOGGER.warning("Running outside the convergence theory (forced): %s", "; ".join(violations))
    return _assemble(constants, r, lam, alpha, beta, regime, None, forced=bool(violations))


def evaluate_F(problem: CompositeMinimaxProblem, x: object, y: object) -> float:
    """Return ``F(x, y) = h_y(c_y(x))``.

    Raises:
        DimensionError: On a dimension mismatch.
    """

    xv = problem.x_vector(x)
    yv = problem.y_vector(y)
    return float(problem.h_eval(problem.c_eval(xv, yv), yv))


def jacobian_matrix(problem: CompositeMinimaxProblem, x: Vector, y: Vector) -> np.ndarray:
    """Dense Jacobian of ``c_y`` at ``x``, from the dedicated oracle or by stacking JVPs."""

    if problem.c_jacobian is not None:
        return np.asarray(problem.c_jacobian(x, y), dtype=np.float64)
    eye = np.eye(problem.dim_x)
    return np.column_stack([problem.c_jvp(x, y, eye[:, j]) for j in range(problem.dim_x)])


def sample_point(convex_set: ConvexSet, rng: np.random.Generator, radius: float = 1.0) -> Vector:
    """Draw a feasible point; unbounded directions are sampled at scale ``radius``."""

    if isinstance(convex_set, Box):
        lower, upper = convex_set.lower, convex_set.upper
        finite_lo, finite_hi = np.isfinite(lower), np.isfinite(upper)
        lo = np.where(finite_lo, lower, np.where(finite_hi, upper - 2.0 * radius, -radius))
        hi = np.where(finite_hi, upper, np.where(finite_lo, lower + 2.0 * radius, radius))
        return rng.uniform(lo, hi)
    if isinstance(convex_set, Ball2):
        direction = rng.standard_normal(convex_set.dim)
        direction /= max(float(np.linalg.norm(direction)), 1e-300)
        scale = convex_set.radius * rng.uniform() ** (1.0 / convex_set.dim)
        return convex_set.center + scale * direction
    if isinstance(convex_set, Simplex):
        return rng.dirichlet(np.ones(convex_set.dim))
    return radius * rng.standard_normal(convex_set.dim)


@dataclass(frozen=True)
class ConstantProbe:
    """Finite-difference estimates of the smoothness constants on sampled points.

    Estimates are lower bounds of the true moduli; an estimate exceeding the
    declared value flags a misdeclaration.
    """

    lipschitz_h: float
    lipschitz_c: float
    dual_lipschitz: float
    declared: ProblemConstants
    flags: tuple[str, ...]


def probe_constants(
    problem: CompositeMinimaxProblem,
    samples: int = 50,
    seed: int = 0,
    radius: float = 1.0,
    slack: float = 1.05,
) -> ConstantProbe:
    """Sample finite differences to flag gross misdeclaration of ``L_h``, ``L_c`` and ``L``."""

    rng = np.random.default_rng(seed)
    est_h = est_c = est_dual = 0.0
    for _ in range(samples):
        x = sample_point(problem.set_x, rng, radius)
        x2 = sample_point(problem.set_x, rng, radius)
        y = sample_point(problem.set_y, rng, radius)
        y2 = sample_point(problem.set_y, rng, radius)
        z = problem.c_eval(x, y)
        dz = rng.standard_normal(problem.dim_z)
        z2 = z + dz * (radius / max(float(np.linalg.norm(dz)), 1e-300))
        gap_z = float(np.linalg.norm(z - z2))
        if gap_z > 0:
            est_h = max(est_h, abs(problem.h_eval(z, y) - problem.h_eval(z2, y)) / gap_z)
        gap_x = float(np.linalg.norm(x - x2))
        if gap_x > 0:
            v = rng.standard_normal(problem.dim_x)
            v /= max(float(np.linalg.norm(v)), 1e-300)
            diff = problem.c_jvp(x, y, v) - problem.c_jvp(x2, y, v)
            est_c = max(est_c, float(np.linalg.norm(diff)) / gap_x)
        gap_xy = math.hypot(gap_x, float(np.linalg.norm(y - y2)))
        if gap_xy > 0:
            diff_y = problem.grad_y(x, y) - problem.grad_y(x2, y2)
            est_dual = max(est_dual, float(np.linalg.norm(diff_y)) / gap_xy)
    declared = problem.constants
    flags: list[str] = []
    if est_h > slack * declared.lipschitz_h:
        flags.append(f"lipschitz_h declared {declared.lipschitz_h:g}, observed {est_h:g}")
    if est_c > slack * declared.lipschitz_c:
        flags.append(f"lipschitz_c declared {declared.lipschitz_c:g}, observed {est_c:g}")
    if est_dual > slack * declared.lipschitz:
        flags.append(f"L declared {declared.lipschitz:g}, observed grad_y modulus {est_dual:g}")
    for flag in flags:
        LOGGER.warning("Constant probe on %s: %s", problem.name, flag)
    return ConstantProbe(est_h, est_c, est_dual, declared, tuple(flags))


@dataclass(frozen=True)
class OracleCheck:
    """Worst observed deviations of the oracle consistency checks."""

    jacobian_rel_error: float
    adjoint_error: float
    convexity_violation: float
    lipschitz_ratio: float
    grad_y_rel_error: float

    def passed(self, fd_tol: float = 1e-5, adjoint_tol: float = 1e-10) -> bool:
        return (
            self.jacobian_rel_error <= fd_tol
            and self.adjoint_error <= adjoint_tol
            and self.convexity_violation <= 1e-10
            and self.lipschitz_ratio <= 1.0 + 1e-12
            and self.grad_y_rel_error <= fd_tol
        )


def _rel_error(approx: Vector, exact: Vector) -> float:
    return float(np.linalg.norm(approx - exact)) / max(float(np.linalg.norm(exact)), 1.0)


def check_oracles(
    problem: CompositeMinimaxProblem,
    samples: int = 20,
    seed: int = 0,
    radius: float = 1.0,
    step: float = 1e-6,
) -> OracleCheck:
    """Finite-difference and sampling checks of the problem oracles.

    Central differences of ``c_eval`` validate ``c_jvp``; the adjoint identity
    validates ``c_vjp``; random chords validate convexity and the declared
    ``L_h``; central differences of ``F(x, .)`` validate ``grad_y``. The
    ``grad_y`` differences move along directions tangent to ``Y`` only through
    the formula, so points may leave ``Y`` by ``step``.
    """

    rng = np.random.default_rng(seed)
    jac_err = adj_err = convex_violation = lip_ratio = grad_err = 0.0
    for _ in range(samples):
        x = sample_point(problem.set_x, rng, radius)
        y = sample_point(problem.set_y, rng, radius)
        v = rng.standard_normal(problem.dim_x)
        u = rng.standard_normal(problem.dim_z)
        jv = problem.c_jvp(x, y, v)
        fd = (problem.c_eval(x + step * v, y) - problem.c_eval(x - step * v, y)) / (2.0 * step)
        jac_err = max(jac_err, _rel_error(fd, jv))
        lhs = float(jv @ u)
        rhs = float(v @ problem.c_vjp(x, y, u))
        adj_err = max(adj_err, abs(lhs - rhs) / max(1.0, abs(lhs)))

        z = problem.c_eval(x, y)
        z2 = z + rng.standard_normal(problem.dim_z)
        t = float(rng.uniform())
        mixed = problem.h_eval(t * z + (1.0 - t) * z2, y)
        chord = t * problem.h_eval(z, y) + (1.0 - t) * problem.h_eval(z2, y)
        convex_violation = max(convex_violation, mixed - chord)
        gap = float(np.linalg.norm(z - z2))
        if gap > 0:
            diff = abs(problem.h_eval(z, y) - problem.h_eval(z2, y))
            lip_ratio = max(lip_ratio, diff / (problem.constants.lipschitz_h * gap))

        grad = problem.grad_y(x, y)
        fd_grad = np.empty(problem.dim_y)
        for j in range(problem.dim_y):
            e = np.zeros(problem.dim_y)
            e[j] = step
            fd_grad[j] = (
                problem.h_eval(problem.c_eval(x, y + e), y + e) - problem.h_eval(problem.c_eval(x, y - e), y - e)
            ) / (2.0 * step)
        grad_err = max(grad_err, _rel_error(fd_grad, grad))
    return OracleCheck(jac_err, adj_err, max(convex_violation, 0.0), lip_ratio, grad_err)


def dual_diameter(problem: CompositeMinimaxProblem) -> float:
    """Diameter of ``Y`` as recorded in the constants, or computed from the set."""

    declared = problem.constants.diam_y
    return declared if math.isfinite(declared) else diameter(problem.set_y)


def subgradient_x(problem: CompositeMinimaxProblem, x: Vector, y: Vector) -> Vector:
    """Chain-rule subgradient ``J_y(x)^T s`` of ``F(., y)`` with ``s`` in ``dh_y(c_y(x))``."""

    return problem.c_vjp(x, y, problem.h_subgrad(problem.c_eval(x, y), y))


def smooth_minimax_problem(
    *,
    value: Callable[[Vector, Vector], float],
    grad_x: Callable[[Vector, Vector], Vector],
    grad_y: Callable[[Vector, Vector], Vector],
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
    f_oracle: MaxOracle | None = None,
    name: str = "smooth",
    metadata: dict[str, object] | None = None,
) -> CompositeMinimaxProblem:
    """Wrap a smooth scalar ``F`` as ``h = identity`` composed with ``c = F``.

    ``h`` is affine, so prox-linear subproblems over boxes are solved in closed form.
    """

    def c_eval(x: Vector, y: Vector) -> Vector:
        return np.array([value(x, y)], dtype=np.float64)

    def c_jvp(x: Vector, y: Vector, v: Vector) -> Vector:
        return np.array([float(grad_x(x, y) @ v)], dtype=np.float64)

    def c_vjp(x: Vector, y: Vector, u: Vector) -> Vector:
        return np.asarray(grad_x(x, y), dtype=np.float64) * float(u[0])

    def c_jacobian(x: Vector, y: Vector) -> Vector:
        return np.asarray(grad_x(x, y), dtype=np.float64).reshape(1, -1)

    def h_eval(z: Vector, y: Vector) -> float:
        return float(z[0])

    def h_subgrad(z: Vector, y: Vector) -> Vector:
        return np.ones(1)

    return CompositeMinimaxProblem(
        dim_x=set_x.dim,
        dim_y=set_y.dim,
        dim_z=1,
        c_eval=c_eval,
        c_jvp=c_jvp,
        c_vjp=c_vjp,
        h_eval=h_eval,
        h_subgrad=h_subgrad,
        grad_y=grad_y,
        set_x=set_x,
        set_y=set_y,
        constants=constants,
        f_oracle=f_oracle,
        name=name,
        h_affine=True,
        c_jacobian=c_jacobian,
        metadata=dict(metadata or {}),
    )


COUNTED_ORACLES = ("c_eval", "c_jvp", "c_vjp", "c_jacobian", "h_eval", "h_subgrad", "grad_y", "f_oracle")
"""First-order oracles charged against a benchmark budget."""


@dataclass(eq=False)
class OracleCounter:
    """Counts oracle calls made inside :meth:`counting`.

    Diagnostics evaluated outside :meth:`counting` are not charged. A step that
    starts below ``budget`` always completes, so a run may overshoot it by the
    cost of one step.
    """

    budget: int | None = None
    calls: int = 0
    _active: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        if self.budget is not None and self.budget < 1:
            raise ParameterError("the oracle budget must be >= 1")

    @property
    def exhausted(self) -> bool:
        return self.budget is not None and self.calls >= self.budget

    @contextmanager
    def counting(self) -> Iterator[None]:
        self._active = True
        try:
            yield
        finally:
            self._active = False

    def wrap(self, oracle: Callable[..., Any]) -> Callable[..., Any]:
        def counted(*args: Any) -> Any:
            if self._active:
                self.calls += 1
            return oracle(*args)

        return counted


def counting(counter: OracleCounter | None) -> AbstractContextManager[None]:
    """``counter.counting()``, or a no-op without a counter."""

    return nullcontext() if counter is None else counter.counting()


def count_oracles(
    problem: CompositeMinimaxProblem, budget: int | None = None
) -> tuple[CompositeMinimaxProblem, OracleCounter]:
    """A copy of ``problem`` whose :data:`COUNTED_ORACLES` report to a fresh counter.

    Raises:
        ParameterError: If ``budget < 1``.
    """

    counter = OracleCounter(budget)
    wrapped = {
        name: counter.wrap(getattr(problem, name)) for name in COUNTED_ORACLES if getattr(problem, name) is not None
    }
    return replace(problem, **wrapped), counter
