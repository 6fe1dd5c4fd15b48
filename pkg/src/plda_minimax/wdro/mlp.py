"""A ``d -> 5 -> 5 -> 1`` ELU classifier under variation-regularized WDRO.

The network score is ``s(x) = w3^T elu(W2 elu(W1 x + b1) + b2) + b3`` and the
loss is the logistic loss ``log(1 + exp(-t s))`` for labels ``t = +-1``. The
composite map needs the input gradient ``grad_x l`` (a reverse pass) and its
derivatives in the parameters, which are computed forward-over-reverse: the
JVP pushes a tangent through both passes and the VJP is its exact transpose.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import expit, log_expit

from ..errors import ParameterError
from ..problem_model import CompositeMinimaxProblem
from ..types import Matrix, Vector
from .data import ClassificationDataset, RegressionDataset
from .objective import NormOrder, build_wdro_problem

LOGGER = logging.getLogger(__name__)

HIDDEN = 5
DEFAULT_TRUST_RADIUS = 10.0


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Weights and biases of the two hidden ELU layers and the linear output."""

    w1: Matrix
    b1: Vector
    w2: Matrix
    b2: Vector
    w3: Vector
    b3: float

    @property
    def input_dim(self) -> int:
        return int(self.w1.shape[1])

    @staticmethod
    def size_for(input_dim: int) -> int:
        return HIDDEN * input_dim + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN + 1

    def flatten(self) -> Vector:
        return np.concatenate(
            (self.w1.ravel(), self.b1, self.w2.ravel(), self.b2, self.w3, np.array([self.b3]))
        ).astype(np.float64)

    @classmethod
    def unflatten(cls, theta: Vector, input_dim: int) -> MlpParams:
        """Inverse of :meth:`flatten`.

        Raises:
            ParameterError: If ``theta`` has the wrong length.
        """

        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != cls.size_for(input_dim):
            raise ParameterError(f"expected {cls.size_for(input_dim)} parameters, got {theta.shape[0]}")
        h, d = HIDDEN, input_dim
        offsets = np.cumsum([0, h * d, h, h * h, h, h])
        return cls(
            w1=theta[offsets[0] : offsets[1]].reshape(h, d),
            b1=theta[offsets[1] : offsets[2]],
            w2=theta[offsets[2] : offsets[3]].reshape(h, h),
            b2=theta[offsets[3] : offsets[4]],
            w3=theta[offsets[4] : offsets[5]],
            b3=float(theta[offsets[5]]),
        )

    @classmethod
    def zeros(cls, input_dim: int) -> MlpParams:
        return cls.unflatten(np.zeros(cls.size_for(input_dim)), input_dim)

    @classmethod
    def random(cls, input_dim: int, seed: int, scale: float = 0.5) -> MlpParams:
        rng = np.random.default_rng(seed)
        return cls.unflatten(scale * rng.standard_normal(cls.size_for(input_dim)), input_dim)


def _elu(h: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    # Value, first and second derivative.
    negative = np.exp(np.minimum(h, 0.0))
    positive = h > 0.0
    return np.where(positive, h, negative - 1.0), np.where(positive, 1.0, negative), np.where(positive, 0.0, negative)


class _Pass(NamedTuple):
    params: MlpParams
    a1: Matrix
    d1: Matrix
    e1: Matrix
    a2: Matrix
    d2: Matrix
    e2: Matrix
    score: Vector
    q1: Matrix
    q2: Matrix
    back1: Matrix
    grad_score: Matrix
    slope: Vector
    curvature: Vector


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Per-sample logistic losses and input gradients of the ELU network on ``data``."""

    data: ClassificationDataset

    @property
    def dim(self) -> int:
        return MlpParams.size_for(self.data.dim)

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def input_dim(self) -> int:
        return self.data.dim

    def _forward(self, theta: Vector) -> _Pass:
        p = MlpParams.unflatten(theta, self.data.dim)
        x, t = self.data.features, self.data.targets
        a1, d1, e1 = _elu(x @ p.w1.T + p.b1)
        a2, d2, e2 = _elu(a1 @ p.w2.T + p.b2)
        score = a2 @ p.w3 + p.b3
        # Reverse pass for ds/dx.
        q2 = d2 * p.w3
        back1 = q2 @ p.w2
        q1 = d1 * back1
        grad_score = q1 @ p.w1
        slope = -t * expit(-t * score)
        curvature = t * t * expit(t * score) * expit(-t * score)
        return _Pass(p, a1, d1, e1, a2, d2, e2, score, q1, q2, back1, grad_score, slope, curvature)

    def scores(self, theta: Vector, features: Matrix | None = None) -> Vector:
        p = MlpParams.unflatten(theta, self.data.dim)
        x = self.data.features if features is None else features
        a1, _, _ = _elu(x @ p.w1.T + p.b1)
        a2, _, _ = _elu(a1 @ p.w2.T + p.b2)
        return np.asarray(a2 @ p.w3 + p.b3, dtype=np.float64)

    def losses_and_grads(self, theta: Vector) -> tuple[Vector, Matrix]:
        fw = self._forward(theta)
        losses = -log_expit(self.data.targets * fw.score)
        return losses, fw.slope[:, None] * fw.grad_score

    def jvp(self, theta: Vector, v: Vector) -> tuple[Vector, Matrix]:
        fw = self._forward(theta)
        p, dp = fw.params, MlpParams.unflatten(v, self.data.dim)
        x = self.data.features
        dh1 = x @ dp.w1.T + dp.b1
        da1, dd1 = fw.d1 * dh1, fw.e1 * dh1
        dh2 = da1 @ p.w2.T + fw.a1 @ dp.w2.T + dp.b2
        da2, dd2 = fw.d2 * dh2, fw.e2 * dh2
        dscore = da2 @ p.w3 + fw.a2 @ dp.w3 + dp.b3
        dq2 = dd2 * p.w3 + fw.d2 * dp.w3
        dq1 = dd1 * fw.back1 + fw.d1 * (dq2 @ p.w2 + fw.q2 @ dp.w2)
        dgrad = dq1 @ p.w1 + fw.q1 @ dp.w1
        dslope = fw.curvature * dscore
        return fw.slope * dscore, dslope[:, None] * fw.grad_score + fw.slope[:, None] * dgrad

    def vjp(self, theta: Vector, a: Vector, b: Matrix) -> Vector:
        fw = self._forward(theta)
        p, x = fw.params, self.data.features
        bar_grad = fw.slope[:, None] * b
        bar_score = a * fw.slope + fw.curvature * np.sum(b * fw.grad_score, axis=1)
        bar_q1 = bar_grad @ p.w1.T
        g_w1 = fw.q1.T @ bar_grad
        bar_d1 = bar_q1 * fw.back1
        mixed = bar_q1 * fw.d1
        bar_q2 = mixed @ p.w2.T
        g_w2 = fw.q2.T @ mixed
        bar_d2 = bar_q2 * p.w3
        g_w3 = np.sum(bar_q2 * fw.d2, axis=0) + fw.a2.T @ bar_score
        g_b3 = float(bar_score.sum())
        bar_a2 = bar_score[:, None] * p.w3[None, :]
        bar_h2 = bar_d2 * fw.e2 + bar_a2 * fw.d2
        bar_a1 = bar_h2 @ p.w2
        g_w2 = g_w2 + bar_h2.T @ fw.a1
        g_b2 = bar_h2.sum(axis=0)
        bar_h1 = bar_d1 * fw.e1 + bar_a1 * fw.d1
        g_w1 = g_w1 + bar_h1.T @ x
        g_b1 = bar_h1.sum(axis=0)
        return MlpParams(g_w1, g_b1, g_w2, g_b2, g_w3, g_b3).flatten()


def build_mlp_wdro(
    data: RegressionDataset, rho: float, p: NormOrder, trust_radius: float = DEFAULT_TRUST_RADIUS
) -> CompositeMinimaxProblem:
    """WDRO training problem of the ELU classifier.

    The declared constants are coarse bounds over ``||theta|| <= trust_radius``
    from the layer products; solver runs on this family use explicit
    parameters.

    Raises:
        ParameterError: If ``rho < 0`` or a label is not ``+-1``.
    """

    model = MlpModel(ClassificationDataset(data.features, data.targets, dict(data.metadata)))
    # Every layer factor is bounded by (R + 1); input gradients add one more factor per layer.
    feature_scale = 1.0 + float(np.max(np.linalg.norm(data.features, axis=1)))
    growth = (trust_radius + 1.0) ** 4 * feature_scale**2
    lipschitz_c = math.sqrt(data.size) * growth
    lipschitz_y = rho * math.sqrt(data.size) * growth
    return build_wdro_problem(
        model,
        rho,
        p,
        lipschitz_c=lipschitz_c,
        lipschitz_y=lipschitz_y,
        trust_radius=trust_radius,
        name="mlp-wdro",
        metadata=dict(data.metadata),
    )


def accuracy(theta: Vector, model: MlpModel, data: ClassificationDataset | None = None) -> float:
    """Share of samples whose score sign (``0 -> +1``) matches the label."""

    target = model.data if data is None else data
    predicted = np.where(model.scores(theta, target.features) >= 0.0, 1.0, -1.0)
    return float(np.mean(predicted == target.targets))


def write_decision_boundary_csv(
    path: str | Path,
    model: MlpModel,
    thetas: dict[str, Vector],
    bounds: tuple[float, float] = (-3.0, 3.0),
    resolution: int = 101,
) -> Path:
    """Scores of each named parameter vector on a square grid: columns ``x1,x2,<name>...``.

    Raises:
        ParameterError: If the model input is not two-dimensional.
    """

    if model.input_dim != 2:
        raise ParameterError("decision boundaries need two-dimensional inputs")
    axis = np.linspace(bounds[0], bounds[1], resolution)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack((g1.ravel(), g2.ravel()))
    names = sorted(thetas)
    columns = [model.scores(thetas[name], grid) for name in names]
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x1", "x2", *names])
        for index, point in enumerate(grid):
            writer.writerow([repr(float(point[0])), repr(float(point[1]))] + [repr(float(c[index])) for c in columns])
    LOGGER.info("Wrote decision boundary grid %s (%d points)", target, grid.shape[0])
    return target
