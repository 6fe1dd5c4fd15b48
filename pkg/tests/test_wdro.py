from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from plda_minimax.errors import DatasetFormatError, ParameterError
from plda_minimax.problem_model import CompositeMinimaxProblem
from plda_minimax.wdro import (
    LinearRegressionModel,
    MlpModel,
    MlpParams,
    RegressionDataset,
    accuracy,
    build_mlp_wdro,
    cached_regression_data,
    load_libsvm,
    mean_squared_error,
    objective_g,
    objective_subgradient,
    parse_norm,
    synth_regression_data,
    synth_ring_classification,
    train_test_split,
    write_decision_boundary_csv,
)
from plda_minimax.wdro.objective import outer_lipschitz, project_dual_balls


def test_parse_norm() -> None:
    assert parse_norm(1) == "1"
    assert parse_norm("2.0") == "2"
    assert parse_norm("Inf") == "inf"
    with pytest.raises(ParameterError):
        parse_norm("3")


def test_dual_ball_projection_for_each_norm() -> None:
    u = np.array([[3.0, 1.0], [0.2, -0.1]])
    radii = np.ones(2)

    assert project_dual_balls(u, radii, "inf") == pytest.approx(np.array([[1.0, 0.0], [0.2, -0.1]]))
    assert project_dual_balls(u, radii, "1") == pytest.approx(np.array([[1.0, 1.0], [0.2, -0.1]]))
    scaled = project_dual_balls(u, radii, "2")
    assert np.linalg.norm(scaled[0]) == pytest.approx(1.0)
    assert scaled[1] == pytest.approx(u[1])


def test_outer_lipschitz() -> None:
    assert outer_lipschitz(4, 3, 1.0, "1") == pytest.approx(0.5 + math.sqrt(3.0))
    assert outer_lipschitz(4, 3, 1.0, "inf") == pytest.approx(1.5)


def test_objective_g_matches_the_max_oracle(small_data: RegressionDataset, linreg_problem: CompositeMinimaxProblem) -> None:
    model = LinearRegressionModel(small_data)
    theta = np.array([0.3, -0.7])
    assert linreg_problem.f_oracle is not None

    value, witness = linreg_problem.f_oracle(theta)

    assert objective_g(model, theta, 1.0, "2") == pytest.approx(value)
    assert witness.sum() == 1.0
    assert objective_g(model, np.zeros(2), 1.0, "2") == pytest.approx(float(np.mean(0.5 * small_data.targets**2)))


def test_objective_subgradient_at_a_smooth_point(small_data: RegressionDataset) -> None:
    model = LinearRegressionModel(small_data)
    theta = np.array([0.3, -0.7])
    sub = objective_subgradient(model, theta, 1.0, "2")
    step = 1e-6

    for index in range(2):
        bump = np.zeros(2)
        bump[index] = step
        fd = (objective_g(model, theta + bump, 1.0, "2") - objective_g(model, theta - bump, 1.0, "2")) / (2 * step)
        assert sub[index] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_wdro_problem_rejects_negative_rho() -> None:
    with pytest.raises(ParameterError):
        build_mlp_wdro(synth_ring_classification(20, 1.0, seed=0), rho=-1.0, p="2")


def test_load_libsvm_fills_absent_indices(tmp_path: Path) -> None:
    path = tmp_path / "data.txt"
    path.write_text("1.5 1:2 3:4\n\n-1 2:1\n", encoding="utf-8")

    data = load_libsvm(path)

    assert data.features.tolist() == [[2.0, 0.0, 4.0], [0.0, 1.0, 0.0]]
    assert data.targets.tolist() == [1.5, -1.0]
    assert load_libsvm(path, dim=5).dim == 5


@pytest.mark.parametrize(
    ("content", "dim", "line_number"),
    [
        ("1 1:x\n", None, 1),
        ("1 1:1\n2 4:1\n", 3, 2),
        ("1 1:1\n1 2\n", None, 2),
        ("1 0:1\n", None, 1),
    ],
)
def test_load_libsvm_reports_the_bad_line(tmp_path: Path, content: str, dim: int | None, line_number: int) -> None:
    path = tmp_path / "bad.txt"
    path.write_text(content, encoding="utf-8")

    with pytest.raises(DatasetFormatError) as exc:
        load_libsvm(path, dim)

    assert exc.value.line_number == line_number


def test_load_libsvm_rejects_an_empty_file(tmp_path: Path) -> None:
    path = tmp_path / "empty.txt"
    path.write_text("\n", encoding="utf-8")

    with pytest.raises(DatasetFormatError):
        load_libsvm(path)


def test_synthetic_regression_is_seeded() -> None:
    first = synth_regression_data(10, 3, seed=5)
    second = synth_regression_data(10, 3, seed=5)

    assert np.array_equal(first.features, second.features)
    assert first.metadata["mode"] == "planted"
    assert synth_regression_data(10, 3, seed=5, mode="independent").targets.shape == (10,)
    with pytest.raises(ParameterError):
        synth_regression_data(0, 3, seed=5)


def test_cached_dataset_round_trips(tmp_path: Path) -> None:
    created = cached_regression_data(tmp_path, 6, 2, seed=1)
    loaded = cached_regression_data(tmp_path, 6, 2, seed=1)

    assert list(tmp_path.iterdir()) == [tmp_path / "regression_n6_d2_seed1_planted.csv"]
    assert np.array_equal(created.features, loaded.features)
    assert np.array_equal(created.targets, loaded.targets)


def test_train_test_split_sizes(small_data: RegressionDataset) -> None:
    train, test = train_test_split(small_data, 0.25, seed=0)

    assert (train.size, test.size) == (6, 2)
    with pytest.raises(ParameterError):
        train_test_split(small_data, 1.0, seed=0)


def test_ring_labels_follow_the_radius() -> None:
    data = synth_ring_classification(200, 1.2, seed=3)
    norms = np.linalg.norm(data.features, axis=1)

    assert set(np.unique(data.targets)) <= {-1.0, 1.0}
    assert np.all((data.targets > 0) == (norms >= math.sqrt(2.0)))
    assert data.size < 200
    with pytest.raises(ParameterError):
        synth_ring_classification(10, 0.5, seed=0)


def test_mlp_parameter_layout() -> None:
    params = MlpParams.random(2, seed=0)
    flat = params.flatten()

    assert MlpParams.size_for(2) == 51
    assert flat.shape == (51,)
    assert np.array_equal(MlpParams.unflatten(flat, 2).flatten(), flat)
    with pytest.raises(ParameterError):
        MlpParams.unflatten(flat[:-1], 2)


def test_mlp_loss_derivative_matches_finite_differences() -> None:
    model = MlpModel(synth_ring_classification(12, 1.0, seed=2))
    theta = MlpParams.random(2, seed=1).flatten()
    direction = np.random.default_rng(0).standard_normal(theta.shape[0])
    step = 1e-6

    d_losses, _ = model.jvp(theta, direction)
    ahead, _ = model.losses_and_grads(theta + step * direction)
    behind, _ = model.losses_and_grads(theta - step * direction)

    assert d_losses == pytest.approx((ahead - behind) / (2 * step), rel=1e-5, abs=1e-7)


def test_mlp_accuracy_and_decision_boundary(tmp_path: Path) -> None:
    data = synth_ring_classification(40, 1.0, seed=4)
    model = MlpModel(data)
    theta = MlpParams.random(2, seed=0).flatten()

    assert 0.0 <= accuracy(theta, model) <= 1.0
    path = write_decision_boundary_csv(tmp_path / "boundary.csv", model, {"plda": theta}, resolution=5)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x1,x2,plda"
    assert len(lines) == 26


def test_mean_squared_error(small_data: RegressionDataset) -> None:
    assert mean_squared_error(np.zeros(2), small_data) == pytest.approx(float(np.mean(small_data.targets**2)))
