"""Error types and structured error payloads for plda-minimax.

Solver code raises the exceptions below; the command layer converts them into
a stable JSON envelope so CLI callers never have to parse tracebacks.
"""

from __future__ import annotations

from dataclasses import dataclass


class PldaError(Exception):
    """Base class for every library error."""


class ParameterError(PldaError, ValueError):
    """A precondition on problem data or algorithm parameters is violated."""


class DimensionError(ParameterError):
    """A vector does not match the dimension of the set or problem it is used with."""


class InfeasiblePointError(ParameterError):
    """A point expected to lie in a constraint set is outside it beyond tolerance."""


class Unsupported(PldaError):
    """The requested computation needs an oracle the problem does not provide."""


class ConfigError(PldaError, ValueError):
    """A run configuration failed validation.

    Attributes:
        field: Name of the offending configuration field.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class DatasetFormatError(PldaError, ValueError):
    """A dataset file could not be parsed.

    Attributes:
        line_number: 1-based line of the offending record, if known.
    """

    def __init__(self, message: str, line_number: int | None = None) -> None:
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)
        self.line_number = line_number


class NonconvergedInner(PldaError):
    """An inner solve ran out of budget before certifying the target accuracy.

    Attributes:
        certificate: Achieved distance bound to the exact minimizer.
        target: Requested distance bound.
        iterations: Iterations spent.
    """

    def __init__(self, certificate: float, target: float, iterations: int) -> None:
        super().__init__(
            f"inner solve stopped after {iterations} iterations with certificate {certificate:.3e} > target {target:.3e}"
        )
        self.certificate = certificate
        self.target = target
        self.iterations = iterations


@dataclass(frozen=True)
class ErrorEnvelope:
    """Structured error payload.

    Attributes:
        error_type: High-level error category.
        message: Human readable description of the error.
        details: Optional extra context.
    """

    error_type: str
    message: str
    details: object | None = None

    def to_response(self) -> dict[str, object]:
        """Convert the error to a response dictionary."""

        return {
            "error": {
                "type": self.error_type,
                "message": self.message,
                "details": self.details,
            }
        }


def error_response(error_type: str, message: str, details: object | None = None) -> dict[str, object]:
    """Return a standardized error response.

    Args:
        error_type: High-level error category.
        message: Human readable description.
        details: Optional extra context for debugging.

    Returns:
        A mapping with a single ``error`` key.
    """

    return ErrorEnvelope(error_type=error_type, message=message, details=details).to_response()


def to_error(err: Exception) -> dict[str, object]:
    """Convert an exception into an error response."""

    details: object | None = None
    if isinstance(err, ConfigError):
        details = {"field": err.field}
    elif isinstance(err, DatasetFormatError):
        details = {"line_number": err.line_number}
    elif isinstance(err, NonconvergedInner):
        details = {"certificate": err.certificate, "target": err.target, "iterations": err.iterations}
    return error_response(error_type=err.__class__.__name__, message=str(err), details=details)
