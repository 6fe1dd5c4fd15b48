"""Closed-form two-dimensional minimax problems with known stationary sets.

Each toy provides vectorized formulas for ``F``, its partial derivatives,
``f(x) = max_y F(x, y)`` and a maximizing witness, so grids can be evaluated
without oracle loops. The ``problem`` property wraps the same formulas as a
:class:`CompositeMinimaxProblem` with ``h`` the identity.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import NDArray

from ..convex_sets import Box, WholeSpace
from ..errors import ParameterError
from ..problem_model import CompositeMinimaxProblem, ProblemConstants, smooth_minimax_problem
from ..types import Vector

ToyId = Literal["cubic_quadratic", "sine_bilinear", "bilinear"]
Grid = NDArray[np.float64]
PairFormula = Callable[[Grid, Grid], Grid]
SingleFormula = Callable[[Grid], Grid]


class Component(NamedTuple):
    """A reference point (degenerate ranges) or an axis-aligned segment."""

    x: tuple[float, float]
    y: tuple[float, float]

    @classmethod
    def point(cls, x: float, y: float) -> Component:
        return cls((x, x), (y, y))

    def distance(self, x: float, y: float) -> float:
        dx = max(self.x[0] - x, 0.0, x - self.x[1])
        dy = max(self.y[0] - y, 0.0, y - self.y[1])
        return math.hypot(dx, dy)


@dataclass(frozen=True, eq=False)
class ToyProblem2D:
    """A scalar-``x``, scalar-``y`` toy with its reference MP/GS/OS sets.

    ``x_bounds`` is the enumeration box; ``truncated`` marks toys whose ``X``
    is unbounded and was cut to that box for enumeration.
    """

    identifier: ToyId
    value: PairFormula
    grad_x: PairFormula
    grad_y: PairFormula
    f_value: SingleFormula
    witness: SingleFormula
    x_bounds: tuple[float, float]
    y_bounds: tuple[float, float]
    lipschitz_c: float
    references: dict[str, tuple[Component, ...]] = field(default_factory=dict)
    truncated: bool = False
    dual_strong_concavity: float | None = None

    @cached_property
    def problem(self) -> CompositeMinimaxProblem:
        set_x = WholeSpace(1) if self.truncated else Box.interval(*self.x_bounds)
        set_y = Box.interval(*self.y_bounds)
        strong = self.dual_strong_concavity
        constants = ProblemConstants(
            lipschitz_h=1.0,
            lipschitz_c=self.lipschitz_c,
            kl_exponent=None if strong is None else 0.5,
            kl_modulus=None if strong is None else math.sqrt(2.0 * strong),
            diam_y=set_y.diameter(),
            dual_strong_concavity=strong,
        )

        def scalar(formula: PairFormula) -> Callable[[Vector, Vector], float]:
            return lambda x, y: float(formula(x[0], y[0]))

        def as_array(formula: PairFormula) -> Callable[[Vector, Vector], Vector]:
            return lambda x, y: np.array([float(formula(x[0], y[0]))])

        def f_oracle(x: Vector) -> tuple[float, Vector]:
            return float(self.f_value(x[0])), np.array([float(self.witness(x[0]))])

        value = scalar(self.value)
        return smooth_minimax_problem(
            value=value,
            grad_x=as_array(self.grad_x),
            grad_y=as_array(self.grad_y),
            set_x=set_x,
            set_y=set_y,
            constants=constants,
            f_oracle=f_oracle,
            name=self.identifier,
        )

    def reference(self, kind: Literal["mp", "gs", "os"]) -> tuple[Component, ...]:
        return self.references[kind]


def _cubic_quadratic() -> ToyProblem2D:
    stationary = (Component.point(-1.0, 1.0), Component.point(-2.0 / 3.0, 2.0 / 3.0), Component.point(0.0, 0.0))
    return ToyProblem2D(
        identifier="cubic_quadratic",
        value=lambda x, y: x**3 - 2.0 * x * y - y**2,
        grad_x=lambda x, y: 3.0 * x**2 - 2.0 * y,
        grad_y=lambda x, y: -2.0 * x - 2.0 * y,
        f_value=lambda x: x**3 + x**2,
        witness=lambda x: np.clip(-x, -1.0, 1.0),
        x_bounds=(-1.0, 1.0),
        y_bounds=(-1.0, 1.0),
        lipschitz_c=6.0,
        references={
            "mp": (Component.point(-1.0, 1.0), Component.point(0.0, 0.0)),
            "gs": stationary,
            "os": stationary,
        },
        dual_strong_concavity=2.0,
    )


def _sine_bilinear() -> ToyProblem2D:
    half_pi = math.pi / 2.0
    ends = (Component.point(-half_pi, -1.0), Component.point(half_pi, 1.0))
    return ToyProblem2D(
        identifier="sine_bilinear",
        value=lambda x, y: np.sin(x) * y,
        grad_x=lambda x, y: np.cos(x) * y,
        grad_y=lambda x, y: np.sin(x) + 0.0 * y,
        f_value=lambda x: np.abs(np.sin(x)),
        witness=lambda x: np.where(np.sin(x) >= 0.0, 1.0, -1.0),
        x_bounds=(-half_pi, half_pi),
        y_bounds=(-1.0, 1.0),
        lipschitz_c=1.0,
        references={
            "mp": (Component((0.0, 0.0), (-1.0, 1.0)),),
            "gs": (ends[0], Component.point(0.0, 0.0), ends[1]),
            "os": (ends[0], Component((0.0, 0.0), (-1.0, 1.0)), ends[1]),
        },
    )


def _bilinear() -> ToyProblem2D:
    segment = Component((0.0, 0.0), (-1.0, 1.0))
    return ToyProblem2D(
        identifier="bilinear",
        value=lambda x, y: x * y,
        grad_x=lambda x, y: y + 0.0 * x,
        grad_y=lambda x, y: x + 0.0 * y,
        f_value=lambda x: np.abs(x),
        witness=lambda x: np.where(x >= 0.0, 1.0, -1.0),
        x_bounds=(-2.0, 2.0),
        y_bounds=(-1.0, 1.0),
        lipschitz_c=1.0,
        references={"mp": (segment,), "gs": (Component.point(0.0, 0.0),), "os": (segment,)},
        truncated=True,
    )


_BUILDERS: dict[str, Callable[[], ToyProblem2D]] = {
    "cubic_quadratic": _cubic_quadratic,
    "sine_bilinear": _sine_bilinear,
    "bilinear": _bilinear,
}

TOY_IDS: tuple[str, ...] = tuple(_BUILDERS)


def get_toy(identifier: str) -> ToyProblem2D:
    """Build the toy named ``identifier``.

    Raises:
        ParameterError: For an unknown identifier.
    """

    try:
        builder = _BUILDERS[identifier]
    except KeyError:
        raise ParameterError(f"unknown toy {identifier!r}; expected one of {', '.join(TOY_IDS)}") from None
    return builder()
