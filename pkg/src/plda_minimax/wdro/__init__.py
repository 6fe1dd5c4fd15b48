"""Variation-regularized Wasserstein DRO problems for regression and classification."""

from .data import (
    ClassificationDataset,
    RegressionDataset,
    cached_regression_data,
    load_libsvm,
    read_dataset_csv,
    synth_regression_data,
    synth_ring_classification,
    train_test_split,
    write_dataset_csv,
)
from .linreg import LinearRegressionModel, build_linreg_wdro, default_trust_radius, mean_squared_error
from .mlp import MlpModel, MlpParams, accuracy, build_mlp_wdro, write_decision_boundary_csv
from .objective import objective_g, objective_subgradient, parse_norm

__all__ = [
    "ClassificationDataset",
    "LinearRegressionModel",
    "MlpModel",
    "MlpParams",
    "RegressionDataset",
    "accuracy",
    "build_linreg_wdro",
    "build_mlp_wdro",
    "cached_regression_data",
    "default_trust_radius",
    "load_libsvm",
    "mean_squared_error",
    "objective_g",
    "objective_subgradient",
    "parse_norm",
    "read_dataset_csv",
    "synth_regression_data",
    "synth_ring_classification",
    "train_test_split",
    "write_dataset_csv",
]
