from __future__ import annotations

import numpy as np
import pytest

from plda_minimax.convex_sets import Box
from plda_minimax.problem_model import CompositeMinimaxProblem, ProblemConstants
from plda_minimax.types import Vector
from plda_minimax.wdro import RegressionDataset, build_linreg_wdro, synth_regression_data


def weighted_abs_problem() -> CompositeMinimaxProblem:
    """``F(x, y) = y |x|`` on ``[-2, 2] x [0, 1]``: nonsmooth ``h``, linear ``c``, ``f(x) = |x|``."""

    def h_eval(z: Vector, y: Vector) -> float:
        return float(y[0] * abs(z[0]))

    def h_subgrad(z: Vector, y: Vector) -> Vector:
        return np.array([y[0] * np.sign(z[0])])

    def f_oracle(x: Vector) -> tuple[float, Vector]:
        return float(abs(x[0])), np.ones(1)

    return CompositeMinimaxProblem(
        dim_x=1,
        dim_y=1,
        dim_z=1,
        c_eval=lambda x, y: x.copy(),
        c_jvp=lambda x, y, v: v.copy(),
        c_vjp=lambda x, y, u: u.copy(),
        h_eval=h_eval,
        h_subgrad=h_subgrad,
        grad_y=lambda x, y: np.array([abs(x[0])]),
        set_x=Box.interval(-2.0, 2.0),
        set_y=Box.interval(0.0, 1.0),
        constants=ProblemConstants(lipschitz_h=1.0, lipschitz_c=1.0, diam_y=1.0),
        f_oracle=f_oracle,
        name="weighted_abs",
    )


@pytest.fixture
def abs_problem() -> CompositeMinimaxProblem:
    return weighted_abs_problem()


@pytest.fixture
def small_data() -> RegressionDataset:
    return synth_regression_data(8, 2, seed=0)


@pytest.fixture
def linreg_problem(small_data: RegressionDataset) -> CompositeMinimaxProblem:
    return build_linreg_wdro(small_data, rho=1.0, p="2")
