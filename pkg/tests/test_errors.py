from __future__ import annotations

from plda_minimax.errors import (
    ConfigError,
    DatasetFormatError,
    NonconvergedInner,
    ParameterError,
    error_response,
    to_error,
)


def test_error_response_envelope() -> None:
    assert error_response("X", "boom") == {"error": {"type": "X", "message": "boom", "details": None}}


def test_config_error_names_the_field() -> None:
    payload = to_error(ConfigError("problem.n", "must be >= 1"))

    assert payload["error"] == {"type": "ConfigError", "message": "problem.n: must be >= 1", "details": {"field": "problem.n"}}


def test_dataset_and_inner_errors_carry_their_context() -> None:
    dataset = to_error(DatasetFormatError("bad token", 3))["error"]
    inner = to_error(NonconvergedInner(1e-3, 1e-8, 50))["error"]

    assert isinstance(dataset, dict) and isinstance(inner, dict)
    assert dataset["message"] == "line 3: bad token"
    assert dataset["details"] == {"line_number": 3}
    assert inner["details"] == {"certificate": 1e-3, "target": 1e-8, "iterations": 50}


def test_parameter_errors_are_value_errors() -> None:
    assert issubclass(ParameterError, ValueError)
    assert to_error(ParameterError("r must exceed L"))["error"] == {
        "type": "ParameterError",
        "message": "r must exceed L",
        "details": None,
    }
