"""Constraint-set families with projection, diameter and normal-cone residuals.

Four variants cover every set the solvers need: the whole space, boxes,
Euclidean balls and the probability simplex. All operations are pure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasiblePointError, ParameterError
from .types import Vector
from .utils import as_vector

LOGGER = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
"""Slack allowed when a normal-cone query checks that its point is feasible."""

ACTIVE_TOL = 1e-12
"""A coordinate within this distance of a bound counts as active."""


@dataclass(frozen=True)
class WholeSpace:
    """The unconstrained set R^n."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ParameterError("WholeSpace dimension must be >= 1")

    def project(self, p: Vector) -> Vector:
        return p.copy()

    def contains(self, p: Vector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(np.isfinite(p)))

    def normal_cone_distance(self, point: Vector, v: Vector) -> float:
        return float(np.linalg.norm(v))

    def diameter(self) -> float:
        return math.inf


@dataclass(frozen=True, eq=False)
class Box:
    """Componentwise bounds ``lower <= p <= upper``."""

    lower: Vector
    upper: Vector
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        lower = as_vector(self.lower, name="lower")
        upper = as_vector(self.upper, name="upper")
        if lower.shape != upper.shape:
            raise DimensionError("Box bounds must have equal length")
        if np.any(lower > upper):
            raise ParameterError("Box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "dim", int(lower.shape[0]))

    @classmethod
    def interval(cls, lower: float, upper: float) -> Box:
        """One-dimensional box ``[lower, upper]``."""

        return cls(np.array([lower], dtype=np.float64), np.array([upper], dtype=np.float64))

    @classmethod
    def cube(cls, dim: int, half_width: float) -> Box:
        """The box ``[-half_width, half_width]^dim``."""

        return cls(np.full(dim, -half_width), np.full(dim, half_width))

    def project(self, p: Vector) -> Vector:
        return np.clip(p, self.lower, self.upper)

    def contains(self, p: Vector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def normal_cone_distance(self, point: Vector, v: Vector) -> float:
        scale = np.maximum(1.0, np.abs(point))
        at_upper = point >= self.upper - ACTIVE_TOL * scale
        at_lower = point <= self.lower + ACTIVE_TOL * scale
        residual = v.copy()
        # Outward components at an active bound lie in the normal cone.
        residual[at_upper] = np.minimum(residual[at_upper], 0.0)
        residual[at_lower] = np.maximum(residual[at_lower], 0.0)
        residual[at_upper & at_lower] = 0.0
        return float(np.linalg.norm(residual))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))


@dataclass(frozen=True, eq=False)
class Ball2:
    """Euclidean ball ``{p : ||p - center|| <= radius}``."""

    center: Vector
    radius: float
    dim: int = field(init=False)

    def __post_init__(self) -> None:
        center = as_vector(self.center, name="center")
        if not self.radius > 0:
            raise ParameterError("Ball2 radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dim", int(center.shape[0]))

    def project(self, p: Vector) -> Vector:
        offset = p - self.center
        norm = float(np.linalg.norm(offset))
        if norm <= self.radius:
            return p.copy()
        return self.center + offset * (self.radius / norm)

    def contains(self, p: Vector, tol: float = FEASIBILITY_TOL) -> bool:
        return float(np.linalg.norm(p - self.center)) <= self.radius + tol

    def normal_cone_distance(self, point: Vector, v: Vector) -> float:
        offset = point - self.center
        norm = float(np.linalg.norm(offset))
        if norm < self.radius * (1.0 - ACTIVE_TOL):
            return float(np.linalg.norm(v))
        unit = offset / norm
        radial = max(float(unit @ v), 0.0)
        return float(np.linalg.norm(v - radial * unit))

    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class Simplex:
    """Probability simplex ``{w >= 0, sum(w) = 1}`` in R^dim."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ParameterError("Simplex dimension must be >= 1")

    def project(self, p: Vector) -> Vector:
        # Sort-and-threshold: find the largest k with u_k > (cumsum_k - 1) / k.
        u = np.sort(p)[::-1]
        thresholds = (np.cumsum(u) - 1.0) / np.arange(1, p.shape[0] + 1)
        k = int(np.nonzero(thresholds < u)[0][-1])
        return np.maximum(p - thresholds[k], 0.0)

    def contains(self, p: Vector, tol: float = FEASIBILITY_TOL) -> bool:
        return bool(np.all(p >= -tol) and abs(float(p.sum()) - 1.0) <= tol)

    def normal_cone_distance(self, point: Vector, v: Vector) -> float:
        # N(w) = {t*1 - s : s >= 0, s_i = 0 where w_i > 0}. Eliminating s leaves a
        # convex piecewise-quadratic in t whose minimizer is found over sorted breakpoints.
        active = point <= ACTIVE_TOL
        free = v[~active]
        bound = np.sort(v[active])[::-1]
        base = float(free.sum())
        counts = free.shape[0] + np.arange(bound.shape[0] + 1)
        sums = base + np.concatenate(([0.0], np.cumsum(bound)))
        candidates = sums / counts
        t = float(candidates[-1])
        for j, candidate in enumerate(candidates):
            above_ok = j == 0 or bound[j - 1] > candidate
            below_ok = j == bound.shape[0] or bound[j] <= candidate
            if above_ok and below_ok:
                t = float(candidate)
                break
        residual = np.concatenate((t - free, np.minimum(t - v[active], 0.0)))
        return float(np.linalg.norm(residual))

    def diameter(self) -> float:
        return math.sqrt(2.0) if self.dim > 1 else 0.0


ConvexSet = WholeSpace | Box | Ball2 | Simplex


def _checked(convex_set: ConvexSet, p: object, name: str) -> Vector:
    return as_vector(p, convex_set.dim, name)


def project(convex_set: ConvexSet, p: object) -> Vector:
    """Euclidean projection of ``p`` onto ``convex_set``.

    Raises:
        DimensionError: If ``p`` does not match the set dimension.
    """

    return convex_set.project(_checked(convex_set, p, "point"))


def contains(convex_set: ConvexSet, p: object, tol: float = FEASIBILITY_TOL) -> bool:
    """Return whether ``p`` lies in ``convex_set`` up to ``tol``."""

    return convex_set.contains(_checked(convex_set, p, "point"), tol)


def normal_cone_distance(
    convex_set: ConvexSet,
    point: object,
    v: object,
    *,
    surrogate_step: float | None = None,
) -> float:
    """Return ``dist(0, -v + N_set(point))``.

    Args:
        convex_set: Set whose normal cone is used.
        point: Feasible point (within :data:`FEASIBILITY_TOL`).
        v: Direction, typically an ascent gradient.
        surrogate_step: When given, return the projected-gradient surrogate
            ``||point - project(point + step * v)|| / step`` instead of the exact value.

    Raises:
        InfeasiblePointError: If ``point`` is outside the set beyond tolerance.
    """

    x = _checked(convex_set, point, "point")
    direction = _checked(convex_set, v, "direction")
    if not convex_set.contains(x, FEASIBILITY_TOL):
        raise InfeasiblePointError(f"point is outside {type(convex_set).__name__} beyond {FEASIBILITY_TOL}")
    if surrogate_step is not None:
        if surrogate_step <= 0:
            raise ParameterError("surrogate_step must be positive")
        moved = convex_set.project(x + surrogate_step * direction)
        return float(np.linalg.norm(x - moved)) / surrogate_step
    return convex_set.normal_cone_distance(x, direction)


def diameter(convex_set: ConvexSet) -> float:
    """Exact Euclidean diameter; ``math.inf`` for the whole space."""

    return convex_set.diameter()
