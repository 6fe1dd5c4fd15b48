"""Shared typing protocol definitions for problem oracles."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


@runtime_checkable
class InnerMap(Protocol):
    """``c_y(x)`` evaluation."""

    def __call__(self, x: Vector, y: Vector) -> Vector:  # pragma: no cover - protocol
        ...


@runtime_checkable
class JacobianProduct(Protocol):
    """Jacobian-vector or adjoint product of ``c_y`` at ``x``."""

    def __call__(self, x: Vector, y: Vector, v: Vector) -> Vector:  # pragma: no cover - protocol
        ...


@runtime_checkable
class OuterFunction(Protocol):
    """Convex outer function ``h_y(z)``."""

    def __call__(self, z: Vector, y: Vector) -> float:  # pragma: no cover - protocol
        ...


@runtime_checkable
class OuterSubgradient(Protocol):
    """Element of the convex subdifferential of ``h_y`` at ``z``."""

    def __call__(self, z: Vector, y: Vector) -> Vector:  # pragma: no cover - protocol
        ...


@runtime_checkable
class DualGradient(Protocol):
    """``grad_y F(x, y)``."""

    def __call__(self, x: Vector, y: Vector) -> Vector:  # pragma: no cover - protocol
        ...


@runtime_checkable
class MaxOracle(Protocol):
    """``x -> (f(x), y*)`` with ``f(x) = max_y F(x, y)`` and a maximizing witness."""

    def __call__(self, x: Vector) -> tuple[float, Vector]:  # pragma: no cover - protocol
        ...


@runtime_checkable
class JacobianOracle(Protocol):
    """Dense Jacobian of ``c_y`` at ``x`` with shape ``(dim_z, dim_x)``."""

    def __call__(self, x: Vector, y: Vector) -> Matrix:  # pragma: no cover - protocol
        ...


@runtime_checkable
class SupportSetProjection(Protocol):
    """Projection onto ``U_y`` when ``h_y`` is the support function of ``U_y``."""

    def __call__(self, u: Vector, y: Vector) -> Vector:  # pragma: no cover - protocol
        ...


@runtime_checkable
class FenchelGap(Protocol):
    """``h_y(z) - <u, z>`` for ``u`` in ``U_y``, evaluated without cancellation."""

    def __call__(self, z: Vector, u: Vector, y: Vector) -> float:  # pragma: no cover - protocol
        ...
