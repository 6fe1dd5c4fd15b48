from __future__ import annotations

import math

import numpy as np
import pytest

from plda_minimax.convex_sets import Box, WholeSpace
from plda_minimax.errors import DimensionError, ParameterError
from plda_minimax.problem_model import (
    CompositeMinimaxProblem,
    ProblemConstants,
    check_oracles,
    derive_parameters,
    evaluate_F,
    explicit_parameters,
    probe_constants,
    sample_point,
    validate_parameters,
)
from plda_minimax.prox_linear import select_method
from plda_minimax.verification import get_toy, quadratic_bilinear_instance, strongly_concave_instance

UNIT = ProblemConstants(lipschitz_h=1.0, lipschitz_c=1.0, diam_y=2.0)


def test_constants_validation() -> None:
    with pytest.raises(ParameterError):
        ProblemConstants(lipschitz_h=0.0, lipschitz_c=1.0)
    with pytest.raises(ParameterError):
        ProblemConstants(lipschitz_h=1.0, lipschitz_c=1.0, kl_exponent=0.5)
    with pytest.raises(ParameterError):
        ProblemConstants(lipschitz_h=1.0, lipschitz_c=1.0, kl_exponent=1.0, kl_modulus=1.0)

    assert ProblemConstants(lipschitz_h=2.0, lipschitz_c=3.0).lipschitz == 6.0
    assert ProblemConstants(lipschitz_h=2.0, lipschitz_c=3.0, lipschitz_override=7.5).lipschitz == 7.5


def test_problem_rejects_mismatched_or_unbounded_sets() -> None:
    toy = get_toy("bilinear").problem
    fields = {
        "dim_x": 1,
        "dim_y": 1,
        "dim_z": 1,
        "c_eval": toy.c_eval,
        "c_jvp": toy.c_jvp,
        "c_vjp": toy.c_vjp,
        "h_eval": toy.h_eval,
        "h_subgrad": toy.h_subgrad,
        "grad_y": toy.grad_y,
        "constants": UNIT,
    }
    with pytest.raises(DimensionError):
        CompositeMinimaxProblem(set_x=WholeSpace(2), set_y=Box.interval(-1.0, 1.0), **fields)  # type: ignore[arg-type]
    with pytest.raises(ParameterError):
        CompositeMinimaxProblem(set_x=WholeSpace(1), set_y=WholeSpace(1), **fields)  # type: ignore[arg-type]


def test_theory_parameters_for_unit_lipschitz() -> None:
    params = derive_parameters(UNIT, "general", horizon=100)

    assert params.r == 3.0
    assert params.lam == 1.0
    assert params.zeta == pytest.approx(6.0)
    assert params.alpha == pytest.approx(1.0 / 144.0)
    assert params.beta == pytest.approx(1.0 / 28.0)
    assert params.sigma1 == pytest.approx(1.5)
    assert params.sigma2 == pytest.approx(4.0)
    assert params.eta == pytest.approx(1.0 / 24.0)
    assert params.omega is None
    assert params.kappa is not None
    assert params.as_dict()["lambda"] == 1.0


def test_conversion_factor_keeps_the_lipschitz_term_in_the_dual_step() -> None:
    params = derive_parameters(UNIT, "general", horizon=100)

    # (1 + eta)(1/alpha + L) = 25/24 * 145 exceeds the primal term r (zeta + sigma2 (eta + 1) + sigma1) = 35.
    assert params.rho_conv == pytest.approx(25.0 / 24.0 * 145.0)
    assert params.rho_conv > (1.0 + params.eta) / params.alpha


def test_general_schedule_shrinks_beta_with_the_horizon() -> None:
    params = derive_parameters(UNIT, "general", horizon=10_000)

    assert params.beta == pytest.approx(0.01)


def test_kl_regime_needs_kl_data_and_produces_omega() -> None:
    with pytest.raises(ParameterError):
        derive_parameters(UNIT, "kl", horizon=10)

    problem = quadratic_bilinear_instance()
    params = derive_parameters(problem.constants, "kl", horizon=10)

    assert params.omega is not None and params.omega > 0
    assert 0 < params.beta <= 1.0 / 28.0
    assert params.kl_exponent == 0.5


def test_horizon_must_be_positive() -> None:
    with pytest.raises(ParameterError):
        derive_parameters(UNIT, "general", horizon=0)


def test_explicit_parameters_outside_theory_need_force() -> None:
    with pytest.raises(ParameterError):
        explicit_parameters(UNIT, r=3.0, lam=1.0, alpha=0.05, beta=0.01)

    forced = explicit_parameters(UNIT, r=3.0, lam=1.0, alpha=0.05, beta=0.01, force=True)

    assert forced.forced
    assert forced.alpha == 0.05
    assert any(v.startswith("alpha") for v in validate_parameters(UNIT, 3.0, 1.0, 0.05, 0.01))


def test_explicit_parameters_within_theory_are_not_forced() -> None:
    params = explicit_parameters(UNIT, r=4.0, lam=2.0, alpha=1e-3, beta=0.01)

    assert not params.forced
    assert params.horizon is None


def test_forced_weight_below_lipschitz_leaves_constants_undefined() -> None:
    with pytest.raises(ParameterError):
        explicit_parameters(UNIT, r=1.0, lam=1.0, alpha=0.1, beta=0.1)

    params = explicit_parameters(UNIT, r=1.0, lam=1.0, alpha=0.1, beta=0.1, force=True)

    assert math.isnan(params.zeta)
    assert math.isnan(params.rho_conv)
    assert params.kappa is None


def test_beta_must_lie_in_the_open_unit_interval() -> None:
    with pytest.raises(ParameterError):
        explicit_parameters(UNIT, r=3.0, lam=1.0, alpha=1e-3, beta=1.0, force=True)


def test_evaluate_F_composes_h_and_c() -> None:
    problem = get_toy("bilinear").problem

    assert evaluate_F(problem, [2.0], [0.5]) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        evaluate_F(problem, [1.0, 2.0], [0.5])


def test_sampled_points_are_feasible() -> None:
    rng = np.random.default_rng(3)
    problem = strongly_concave_instance(3)

    for _ in range(10):
        assert problem.set_x.contains(sample_point(problem.set_x, rng))
        assert problem.set_y.contains(sample_point(problem.set_y, rng))


def test_strongly_concave_instance_is_kinked_and_uses_the_dual_inner_solver() -> None:
    problem = strongly_concave_instance(2)
    x = np.array([0.5, -0.25])

    value, witness = problem.f_oracle(x)

    assert value == pytest.approx(0.671875)
    assert evaluate_F(problem, x, witness) == pytest.approx(value)
    assert not problem.h_affine
    assert select_method(problem, "auto") == "dual_projected_gradient"
    assert check_oracles(problem, samples=10, seed=2).passed()
    # |x_j| has a kink at zero: one-sided slopes of f differ by 2.
    step = 1e-4
    right = problem.f_oracle(np.array([step, 0.0]))[0] - problem.f_oracle(np.zeros(2))[0]
    left = problem.f_oracle(np.zeros(2))[0] - problem.f_oracle(np.array([-step, 0.0]))[0]
    assert right / step - left / step == pytest.approx(2.0, abs=1e-3)


def test_linreg_oracles_pass_the_consistency_checks(linreg_problem: CompositeMinimaxProblem) -> None:
    result = check_oracles(linreg_problem, samples=10, seed=1)

    assert result.passed()


def test_probe_does_not_flag_correct_constants() -> None:
    probe = probe_constants(strongly_concave_instance(2), samples=30, seed=0)

    assert probe.flags == ()
    assert 0.0 < probe.lipschitz_h <= math.sqrt(3.0) + 1e-12
    assert probe.lipschitz_c <= 1.0 + 1e-9


def test_probe_flags_an_underdeclared_constant() -> None:
    problem = strongly_concave_instance(2)
    constants = ProblemConstants(lipschitz_h=1.0, lipschitz_c=1.0, diam_y=2.0, lipschitz_override=0.1)
    wrong = CompositeMinimaxProblem(
        dim_x=2,
        dim_y=2,
        dim_z=problem.dim_z,
        c_eval=problem.c_eval,
        c_jvp=problem.c_jvp,
        c_vjp=problem.c_vjp,
        h_eval=problem.h_eval,
        h_subgrad=problem.h_subgrad,
        grad_y=problem.grad_y,
        set_x=problem.set_x,
        set_y=problem.set_y,
        constants=constants,
    )

    probe = probe_constants(wrong, samples=30, seed=0)

    assert any(flag.startswith("L declared") for flag in probe.flags)
