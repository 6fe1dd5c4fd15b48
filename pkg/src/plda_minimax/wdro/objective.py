"""Variation-regularized WDRO as a composite minimax problem.

For per-sample losses ``l_i(theta)`` and input gradients ``g_i(theta)`` the
min-max form is

    F(theta, w) = (1/N) sum_i l_i + rho sum_i w_i ||g_i||_p,   w in the simplex,

with ``c(theta) = (l_1..l_N, g_1..g_N)`` and ``h_w`` the support function of
``{1/N}^N x prod_i B_q(rho w_i)`` (``q`` dual to ``p``). Maximizing over ``w``
gives ``g(theta) = mean l + rho max_i ||g_i||_p``.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, Protocol

import numpy as np

from ..baselines import clarke_subgradient_max
from ..convex_sets import Simplex, WholeSpace
from ..errors import ParameterError
from ..problem_model import CompositeMinimaxProblem, ProblemConstants
from ..types import JacobianOracle, Matrix, Vector

LOGGER = logging.getLogger(__name__)

NormOrder = Literal["1", "2", "inf"]


class WdroModel(Protocol):
    """Per-sample losses and input gradients with their parameter derivatives."""

    @property
    def dim(self) -> int: ...

    @property
    def size(self) -> int: ...

    @property
    def input_dim(self) -> int: ...

    def losses_and_grads(self, theta: Vector) -> tuple[Vector, Matrix]: ...

    def jvp(self, theta: Vector, v: Vector) -> tuple[Vector, Matrix]: ...

    def vjp(self, theta: Vector, a: Vector, b: Matrix) -> Vector: ...


def parse_norm(p: str | float) -> NormOrder:
    text = str(p).strip().lower()
    if text in ("1", "1.0"):
        return "1"
    if text in ("2", "2.0"):
        return "2"
    if text in ("inf", "infinity", "∞"):
        return "inf"
    raise ParameterError(f"p must be 1, 2 or inf, got {p!r}")


def row_norms(g: Matrix, p: NormOrder) -> Vector:
    order = {"1": 1, "2": 2, "inf": np.inf}[p]
    return np.linalg.norm(g, ord=order, axis=1)


def row_norm_subgrads(g: Matrix, p: NormOrder) -> Matrix:
    """A subgradient of ``||.||_p`` at every row.

    ``p = 1`` takes ``sign`` with ``0 -> 0``; ``p = inf`` puts the sign of the
    lowest-index largest-magnitude coordinate on that coordinate; zero rows get zero.
    """

    if p == "1":
        return np.sign(g)
    if p == "2":
        norms = np.linalg.norm(g, axis=1)
        safe = np.where(norms > 0.0, norms, 1.0)
        return np.where(norms[:, None] > 0.0, g / safe[:, None], 0.0)
    out = np.zeros_like(g)
    rows = np.arange(g.shape[0])
    cols = np.argmax(np.abs(g), axis=1)
    out[rows, cols] = np.sign(g[rows, cols])
    return out


def project_dual_balls(u: Matrix, radii: Vector, p: NormOrder) -> Matrix:
    """Row-wise projection onto ``B_q(radii_i)`` with ``q`` the dual exponent of ``p``."""

    if p == "1":
        return np.clip(u, -radii[:, None], radii[:, None])
    if p == "2":
        norms = np.linalg.norm(u, axis=1)
        scale = np.where(norms > radii, radii / np.where(norms > 0.0, norms, 1.0), 1.0)
        return u * scale[:, None]
    out = u.copy()
    simplex = Simplex(u.shape[1])
    for i in np.nonzero(np.abs(u).sum(axis=1) > radii)[0]:
        if radii[i] <= 0.0:
            out[i] = 0.0
            continue
        magnitude = simplex.project(np.abs(u[i]) / radii[i]) * radii[i]
        out[i] = np.sign(u[i]) * magnitude
    return out


def _norm_factor(p: NormOrder, d: int) -> float:
    # Both max ||v||_p over the Euclidean unit ball and max ||s||_2 over the unit dual ball.
    return math.sqrt(d) if p == "1" else 1.0


def outer_lipschitz(n: int, d: int, rho: float, p: NormOrder) -> float:
    """Euclidean Lipschitz modulus of ``h_w`` in ``z``, uniform over the simplex."""

    return 1.0 / math.sqrt(n) + rho * _norm_factor(p, d)


def dual_gradient_lipschitz(rho: float, p: NormOrder, d: int, jacobian_bounds: Vector) -> float:
    """Lipschitz modulus of ``theta -> rho (||g_i(theta)||_p)_i`` from bounds on ``||dg_i/dtheta||``."""

    return rho * _norm_factor(p, d) * float(np.linalg.norm(jacobian_bounds))


def as_parameters(theta: object) -> Vector:
    """A flat parameter vector from an array or anything with a ``flatten()`` method (e.g. ``MlpParams``)."""

    if not isinstance(theta, np.ndarray):
        flatten = getattr(theta, "flatten", None)
        if callable(flatten):
            return np.asarray(flatten(), dtype=np.float64).reshape(-1)
    return np.asarray(theta, dtype=np.float64).reshape(-1)


def objective_g(model: WdroModel, theta: object, rho: float, p: NormOrder) -> float:
    """``mean l_i(theta) + rho max_i ||g_i(theta)||_p``."""

    losses, grads = model.losses_and_grads(as_parameters(theta))
    return float(losses.mean() + rho * row_norms(grads, p).max())


def objective_subgradient(
    model: WdroModel, theta: object, rho: float, p: NormOrder, active_tol: float = 1e-12
) -> Vector:
    """Clarke subgradient of :func:`objective_g` from the pieces ``mean l + rho ||g_i||_p`` that attain the max."""

    vector = as_parameters(theta)
    _, grads = model.losses_and_grads(vector)
    norms = row_norms(grads, p)
    top = float(norms.max())
    active = np.nonzero(norms >= top - active_tol * max(1.0, abs(top)))[0]
    directions = row_norm_subgrads(grads, p)
    mean_weights = np.full(model.size, 1.0 / model.size)
    pieces = []
    for i in active:
        block = np.zeros_like(grads)
        block[i] = rho * directions[i]
        pieces.append(model.vjp(vector, mean_weights, block))
    return clarke_subgradient_max(norms[active].tolist(), pieces)


def build_wdro_problem(
    model: WdroModel,
    rho: float,
    p: NormOrder,
    *,
    lipschitz_c: float,
    lipschitz_y: float,
    trust_radius: float,
    name: str,
    jacobian: JacobianOracle | None = None,
    metadata: dict[str, object] | None = None,
) -> CompositeMinimaxProblem:
    """Assemble the composite problem for ``model``.

    ``lipschitz_c`` and ``lipschitz_y`` are valid on ``||theta|| <= trust_radius``;
    the first iterate found outside that ball is logged.

    Raises:
        ParameterError: If ``rho < 0``.
    """

    if rho < 0:
        raise ParameterError("rho must be >= 0")
    n, d = model.size, model.input_dim
    lip_h = outer_lipschitz(n, d, rho, p)
    warned: list[bool] = []

    def watch(theta: Vector) -> None:
        if not warned and float(np.linalg.norm(theta)) > trust_radius:
            warned.append(True)
            LOGGER.warning(
                "%s: ||theta||=%.3g left the trust radius %.3g; declared constants no longer hold",
                name,
                float(np.linalg.norm(theta)),
                trust_radius,
            )

    def split(z: Vector) -> tuple[Vector, Matrix]:
        return z[:n], z[n:].reshape(n, d)

    def c_eval(theta: Vector, w: Vector) -> Vector:
        losses, grads = model.losses_and_grads(theta)
        return np.concatenate((losses, grads.ravel()))

    def c_jvp(theta: Vector, w: Vector, v: Vector) -> Vector:
        d_losses, d_grads = model.jvp(theta, v)
        return np.concatenate((d_losses, d_grads.ravel()))

    def c_vjp(theta: Vector, w: Vector, u: Vector) -> Vector:
        a, b = split(u)
        return model.vjp(theta, a, b)

    def h_eval(z: Vector, w: Vector) -> float:
        losses, grads = split(z)
        return float(losses.mean() + rho * float(w @ row_norms(grads, p)))

    def h_subgrad(z: Vector, w: Vector) -> Vector:
        _, grads = split(z)
        s = rho * w[:, None] * row_norm_subgrads(grads, p)
        return np.concatenate((np.full(n, 1.0 / n), s.ravel()))

    def h_dual_project(u: Vector, w: Vector) -> Vector:
        _, b = split(u)
        projected = project_dual_balls(b, rho * np.maximum(w, 0.0), p)
        return np.concatenate((np.full(n, 1.0 / n), projected.ravel()))

    def h_fenchel_gap(z: Vector, u: Vector, w: Vector) -> float:
        # The loss block of u is fixed at 1/N, so only the regularizer part remains.
        _, grads = split(z)
        _, b = split(u)
        return float(np.sum(rho * w * row_norms(grads, p) - np.sum(b * grads, axis=1)))

    def grad_y(theta: Vector, w: Vector) -> Vector:
        watch(theta)
        _, grads = model.losses_and_grads(theta)
        return rho * row_norms(grads, p)

    def f_oracle(theta: Vector) -> tuple[float, Vector]:
        losses, grads = model.losses_and_grads(theta)
        norms = row_norms(grads, p)
        witness = np.zeros(n)
        witness[int(np.argmax(norms))] = 1.0
        return float(losses.mean() + rho * float(norms.max())), witness

    constants = ProblemConstants(
        lipschitz_h=lip_h,
        lipschitz_c=lipschitz_c,
        diam_y=Simplex(n).diameter(),
        lipschitz_override=max(lip_h * lipschitz_c, lipschitz_y),
    )
    info: dict[str, object] = {"rho": rho, "p": p, "N": n, "d": d, "trust_radius": trust_radius}
    info.update(metadata or {})
    return CompositeMinimaxProblem(
        dim_x=model.dim,
        dim_y=n,
        dim_z=n + n * d,
        c_eval=c_eval,
        c_jvp=c_jvp,
        c_vjp=c_vjp,
        h_eval=h_eval,
        h_subgrad=h_subgrad,
        grad_y=grad_y,
        set_x=WholeSpace(model.dim),
        set_y=Simplex(n),
        constants=constants,
        f_oracle=f_oracle,
        name=name,
        h_dual_project=h_dual_project,
        h_fenchel_gap=h_fenchel_gap,
        c_jacobian=jacobian,
        metadata=info,
    )
