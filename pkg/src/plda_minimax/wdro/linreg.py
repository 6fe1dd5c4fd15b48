"""Linear regression with squared loss under variation-regularized WDRO."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..problem_model import CompositeMinimaxProblem
from ..types import Matrix, Vector
from .data import RegressionDataset
from .objective import NormOrder, build_wdro_problem, dual_gradient_lipschitz

LOGGER = logging.getLogger(__name__)

TRUST_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class LinearRegressionModel:
    """``l_i = (theta^T x_i - y_i)^2 / 2`` and ``g_i = (theta^T x_i - y_i) theta``."""

    data: RegressionDataset

    @property
    def dim(self) -> int:
        return self.data.dim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def input_dim(self) -> int:
        return self.data.dim

    def residuals(self, theta: Vector) -> Vector:
        return self.data.features @ theta - self.data.targets

    def losses_and_grads(self, theta: Vector) -> tuple[Vector, Matrix]:
        r = self.residuals(theta)
        return 0.5 * r**2, r[:, None] * theta[None, :]

    def jvp(self, theta: Vector, v: Vector) -> tuple[Vector, Matrix]:
        r = self.residuals(theta)
        xv = self.data.features @ v
        return r * xv, xv[:, None] * theta[None, :] + r[:, None] * v[None, :]

    def vjp(self, theta: Vector, a: Vector, b: Matrix) -> Vector:
        x = self.data.features
        r = self.residuals(theta)
        return x.T @ (a * r) + x.T @ (b @ theta) + b.T @ r

    def jacobian(self, theta: Vector, w: Vector) -> Matrix:
        """Dense ``(N + N d) x d`` Jacobian of ``c``."""

        x = self.data.features
        r = self.residuals(theta)
        n, d = x.shape
        blocks = theta[None, :, None] * x[:, None, :] + r[:, None, None] * np.eye(d)[None, :, :]
        return np.vstack((r[:, None] * x, blocks.reshape(n * d, d)))

    def lipschitz_c(self) -> float:
        """Global Lipschitz modulus of the Jacobian: ``||x_i||^2`` per loss row, ``2||x_i||`` per gradient block."""

        norms = np.linalg.norm(self.data.features, axis=1)
        return float(np.linalg.norm(norms**2 + 2.0 * norms))

    def gradient_jacobian_bounds(self, radius: float) -> Vector:
        """Bounds on ``||dg_i/dtheta||`` over ``||theta|| <= radius``."""

        norms = np.linalg.norm(self.data.features, axis=1)
        return 2.0 * radius * norms + np.abs(self.data.targets)


def least_squares(data: RegressionDataset) -> Vector:
    solution, *_ = np.linalg.lstsq(data.features, data.targets, rcond=None)
    return np.asarray(solution, dtype=np.float64)


def default_trust_radius(data: RegressionDataset) -> float:
    """Ten times the norm of the least-squares solution, and at least one."""

    return max(TRUST_FACTOR * float(np.linalg.norm(least_squares(data))), 1.0)


def build_linreg_wdro(
    data: RegressionDataset, rho: float, p: NormOrder, trust_radius: float | None = None
) -> CompositeMinimaxProblem:
    """``F(theta, w) = mean_i l_i + rho sum_i w_i ||(theta^T x_i - y_i) theta||_p`` over ``R^d x simplex``.

    ``L_c`` is global; the Lipschitz constant of ``grad_y F`` holds on
    ``||theta|| <= trust_radius``.

    Raises:
        ParameterError: If ``rho < 0``.
    """

    model = LinearRegressionModel(data)
    radius = default_trust_radius(data) if trust_radius is None else trust_radius
    lipschitz_y = dual_gradient_lipschitz(rho, p, data.dim, model.gradient_jacobian_bounds(radius))
    LOGGER.debug("linreg-wdro N=%d d=%d: trust radius %.3g", data.size, data.dim, radius)
    return build_wdro_problem(
        model,
        rho,
        p,
        lipschitz_c=model.lipschitz_c(),
        lipschitz_y=lipschitz_y,
        trust_radius=radius,
        name="linreg-wdro",
        jacobian=model.jacobian,
        metadata=dict(data.metadata),
    )


def mean_squared_error(theta: Vector, data: RegressionDataset) -> float:
    residual = data.features @ np.asarray(theta, dtype=np.float64) - data.targets
    return float(np.mean(residual**2))
