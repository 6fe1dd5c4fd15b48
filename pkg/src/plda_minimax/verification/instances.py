"""Constructed instances whose dual function is strongly concave (KŁ exponent 1/2).

``F(x, y) = sum_j (|x_j| - x_j^2 / 2) + x^T A y - ||y||^2`` over ``X = [-1, 1]^n``
and the unit ball ``Y``. The primal part is weakly convex and nonsmooth, written
as ``h(c(x))`` with ``h(z) = z_0 + ||z_{1:}||_1`` and a smooth ``c``, so runs go
through the dual prox-linear inner solver. ``F(x, .)`` is 2-strongly concave,
so the KŁ modulus and the dual error bound constants are known in closed form,
and ``f`` has the explicit form ``phi(x) + psi(A^T x)`` with ``psi`` a Huber-type
function.
"""

from __future__ import annotations

import math

import numpy as np

from ..convex_sets import Ball2, Box
from ..errors import ParameterError
from ..problem_model import CompositeMinimaxProblem, ProblemConstants, smooth_minimax_problem
from ..types import Matrix, Vector

STRONG_CONCAVITY = 2.0


def _ball_value(w: Vector) -> tuple[float, Vector]:
    # max_{||y|| <= 1} <w, y> - ||y||^2
    norm = float(np.linalg.norm(w))
    if norm <= 2.0:
        return 0.25 * norm**2, 0.5 * w
    return norm - 1.0, w / norm


def _phi(x: Vector) -> float:
    return float(np.sum(np.abs(x)) - 0.5 * x @ x)


def strongly_concave_instance(n: int = 2, coupling: Matrix | None = None) -> CompositeMinimaxProblem:
    """The abs-plus-bilinear instance with KŁ exponent 1/2 and modulus 2.

    ``h`` is the support function of ``{1} x [-1, 1]^n``, hence ``sqrt(n + 1)``-Lipschitz;
    the Jacobian of ``c`` is 1-Lipschitz. ``L`` is declared as the larger of
    ``L_h L_c`` and the joint Lipschitz constant ``sqrt(||A||^2 + 4)`` of
    ``grad_y F = A^T x - 2 y``.

    Raises:
        ParameterError: If ``coupling`` is not ``n x n``.
    """

    a = np.eye(n) if coupling is None else np.asarray(coupling, dtype=np.float64)
    if a.shape != (n, n):
        raise ParameterError(f"coupling must have shape ({n}, {n})")
    a_norm = float(np.linalg.norm(a, 2))
    lipschitz_h = math.sqrt(n + 1.0)
    constants = ProblemConstants(
        lipschitz_h=lipschitz_h,
        lipschitz_c=1.0,
        kl_exponent=0.5,
        kl_modulus=math.sqrt(2.0 * STRONG_CONCAVITY),
        diam_y=2.0,
        lipschitz_override=max(lipschitz_h, math.sqrt(a_norm**2 + 4.0)),
        dual_strong_concavity=STRONG_CONCAVITY,
    )

    def smooth_row(x: Vector, y: Vector) -> Vector:
        # Gradient in x of the first component of c.
        return a @ y - x

    def c_eval(x: Vector, y: Vector) -> Vector:
        return np.concatenate(([float(x @ a @ y - 0.5 * x @ x - y @ y)], x))

    def c_jvp(x: Vector, y: Vector, v: Vector) -> Vector:
        return np.concatenate(([float(smooth_row(x, y) @ v)], v))

    def c_vjp(x: Vector, y: Vector, u: Vector) -> Vector:
        return float(u[0]) * smooth_row(x, y) + u[1:]

    def c_jacobian(x: Vector, y: Vector) -> Matrix:
        return np.vstack((smooth_row(x, y)[None, :], np.eye(n)))

    def h_eval(z: Vector, y: Vector) -> float:
        return float(z[0] + np.sum(np.abs(z[1:])))

    def h_subgrad(z: Vector, y: Vector) -> Vector:
        return np.concatenate(([1.0], np.sign(z[1:])))

    def h_dual_project(u: Vector, y: Vector) -> Vector:
        return np.concatenate(([1.0], np.clip(u[1:], -1.0, 1.0)))

    def h_fenchel_gap(z: Vector, u: Vector, y: Vector) -> float:
        return float(np.sum(np.abs(z[1:]) - u[1:] * z[1:]))

    def f_oracle(x: Vector) -> tuple[float, Vector]:
        inner, witness = _ball_value(a.T @ x)
        return _phi(x) + inner, witness

    return CompositeMinimaxProblem(
        dim_x=n,
        dim_y=n,
        dim_z=n + 1,
        c_eval=c_eval,
        c_jvp=c_jvp,
        c_vjp=c_vjp,
        h_eval=h_eval,
        h_subgrad=h_subgrad,
        grad_y=lambda x, y: a.T @ x - 2.0 * y,
        set_x=Box.cube(n, 1.0),
        set_y=Ball2(np.zeros(n), 1.0),
        constants=constants,
        f_oracle=f_oracle,
        name="strongly_concave",
        h_dual_project=h_dual_project,
        h_fenchel_gap=h_fenchel_gap,
        c_jacobian=c_jacobian,
        metadata={"coupling": a.tolist()},
    )


def stationary_point(n: int = 2) -> tuple[Vector, Vector]:
    """The unique stationary pair of :func:`strongly_concave_instance` with ``A = I``.

    Away from zero the ``x_j``-slope ``sign(x_j) - x_j / 2`` has the sign of ``x_j``
    on ``[-1, 1]``, so the kink at the origin is the only stationary point and ``y = x / 2 = 0``.
    """

    return np.zeros(n), np.zeros(n)


def quadratic_bilinear_instance() -> CompositeMinimaxProblem:
    """``F(x, y) = x y - y^2`` on ``[-1, 1]^2``: 2-strongly concave in ``y``, ``f(x) = x^2 / 4``."""

    constants = ProblemConstants(
        lipschitz_h=1.0,
        lipschitz_c=1.0,
        kl_exponent=0.5,
        kl_modulus=math.sqrt(2.0 * STRONG_CONCAVITY),
        diam_y=2.0,
        lipschitz_override=math.sqrt(5.0),
        dual_strong_concavity=STRONG_CONCAVITY,
    )

    def f_oracle(x: Vector) -> tuple[float, Vector]:
        return 0.25 * float(x[0]) ** 2, np.array([0.5 * float(x[0])])

    return smooth_minimax_problem(
        value=lambda x, y: float(x[0] * y[0] - y[0] ** 2),
        grad_x=lambda x, y: np.array([y[0]]),
        grad_y=lambda x, y: np.array([x[0] - 2.0 * y[0]]),
        set_x=Box.interval(-1.0, 1.0),
        set_y=Box.interval(-1.0, 1.0),
        constants=constants,
        f_oracle=f_oracle,
        name="quadratic_bilinear",
    )
