from __future__ import annotations

import math

import numpy as np
import pytest

from plda_minimax import convex_sets
from plda_minimax.convex_sets import Ball2, Box, Simplex, WholeSpace
from plda_minimax.errors import DimensionError, InfeasiblePointError, ParameterError


def test_projections_land_on_the_nearest_point() -> None:
    assert convex_sets.project(Box.interval(-1.0, 1.0), [3.0]).tolist() == [1.0]
    assert convex_sets.project(Ball2(np.zeros(2), 1.0), [3.0, 4.0]) == pytest.approx([0.6, 0.8])
    assert convex_sets.project(Simplex(3), [0.5, 0.5, 0.5]) == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    assert convex_sets.project(Simplex(3), [2.0, 0.0, 0.0]) == pytest.approx([1.0, 0.0, 0.0])
    assert convex_sets.project(WholeSpace(2), [5.0, -5.0]).tolist() == [5.0, -5.0]


def test_projections_are_feasible_and_nonexpansive() -> None:
    rng = np.random.default_rng(0)
    sets = [Box.cube(4, 0.5), Ball2(np.ones(4), 2.0), Simplex(4)]
    for convex_set in sets:
        for _ in range(20):
            p, q = 3.0 * rng.standard_normal(4), 3.0 * rng.standard_normal(4)
            pp, qq = convex_set.project(p), convex_set.project(q)
            assert convex_set.contains(pp)
            assert np.linalg.norm(pp - qq) <= np.linalg.norm(p - q) + 1e-12
            assert convex_set.project(pp) == pytest.approx(pp, abs=1e-12)


def test_diameters() -> None:
    assert convex_sets.diameter(WholeSpace(3)) == math.inf
    assert convex_sets.diameter(Box.cube(2, 1.0)) == pytest.approx(2.0 * math.sqrt(2.0))
    assert convex_sets.diameter(Ball2(np.zeros(3), 1.5)) == 3.0
    assert convex_sets.diameter(Simplex(5)) == pytest.approx(math.sqrt(2.0))


def test_box_normal_cone_distance_at_bounds_and_interior() -> None:
    box = Box.interval(-1.0, 1.0)

    assert convex_sets.normal_cone_distance(box, [1.0], [2.0]) == 0.0
    assert convex_sets.normal_cone_distance(box, [1.0], [-2.0]) == pytest.approx(2.0)
    assert convex_sets.normal_cone_distance(box, [0.0], [0.5]) == pytest.approx(0.5)


def test_simplex_normal_cone_distance_is_exact() -> None:
    simplex = Simplex(3)

    assert convex_sets.normal_cone_distance(simplex, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) == pytest.approx(0.0)
    assert convex_sets.normal_cone_distance(simplex, [1 / 3, 1 / 3, 1 / 3], [1.0, 2.0, 3.0]) == pytest.approx(
        math.sqrt(2.0)
    )
    # Pushing mass towards the vertex that already holds it is optimal.
    assert convex_sets.normal_cone_distance(simplex, [0.0, 1.0, 0.0], [-1.0, 4.0, 2.0]) == pytest.approx(0.0)


def test_ball_normal_cone_distance_removes_outward_radial_part() -> None:
    ball = Ball2(np.zeros(2), 1.0)

    assert convex_sets.normal_cone_distance(ball, [1.0, 0.0], [3.0, 4.0]) == pytest.approx(4.0)
    assert convex_sets.normal_cone_distance(ball, [1.0, 0.0], [-3.0, 0.0]) == pytest.approx(3.0)


def test_surrogate_matches_exact_value_away_from_the_boundary() -> None:
    box = Box.cube(2, 1.0)
    point, v = [0.0, 0.2], [0.1, -0.3]

    exact = convex_sets.normal_cone_distance(box, point, v)
    surrogate = convex_sets.normal_cone_distance(box, point, v, surrogate_step=0.1)

    assert surrogate == pytest.approx(exact)


def test_set_errors() -> None:
    with pytest.raises(InfeasiblePointError):
        convex_sets.normal_cone_distance(Box.interval(0.0, 1.0), [2.0], [1.0])
    with pytest.raises(DimensionError):
        convex_sets.project(Simplex(3), [1.0, 0.0])
    with pytest.raises(ParameterError):
        Box.interval(1.0, 0.0)
    with pytest.raises(ParameterError):
        Ball2(np.zeros(2), 0.0)
    with pytest.raises(ParameterError):
        convex_sets.normal_cone_distance(Box.interval(0.0, 1.0), [0.5], [1.0], surrogate_step=0.0)
