"""Brute-force MP/GS/OS sets of the two-dimensional toys on a grid.

Scores are computed for every grid point at once from the toy's closed-form
partials; points scoring at most ``tol`` are grouped into 8-connected clusters
and each cluster is reported by its best-scoring point and its extent.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from ..errors import ParameterError
from ..schemas import CheckReport
from .toys import Component, ToyProblem2D

LOGGER = logging.getLogger(__name__)

_BISECTION_STEPS = 60
_CONNECTIVITY = np.ones((3, 3), dtype=bool)

Array = NDArray[np.float64]


@dataclass(frozen=True)
class StationaryCluster:
    """A connected group of grid points below the tolerance."""

    x: float
    y: float
    score: float
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    size: int

    def as_dict(self) -> dict[str, object]:
        return {
            "point": [self.x, self.y],
            "score": self.score,
            "x_range": list(self.x_range),
            "y_range": list(self.y_range),
            "size": self.size,
        }


@dataclass(frozen=True)
class StationarySets:
    toy: str
    mp: tuple[StationaryCluster, ...]
    gs: tuple[StationaryCluster, ...]
    os: tuple[StationaryCluster, ...]
    grid_step: float
    tol: float
    truncated: bool = False

    def clusters(self, kind: str) -> tuple[StationaryCluster, ...]:
        return {"mp": self.mp, "gs": self.gs, "os": self.os}[kind]

    def as_dict(self) -> dict[str, object]:
        return {
            "toy": self.toy,
            "grid_step": self.grid_step,
            "tol": self.tol,
            "truncated": self.truncated,
            "mp": [c.as_dict() for c in self.mp],
            "gs": [c.as_dict() for c in self.gs],
            "os": [c.as_dict() for c in self.os],
        }


def _axis(bounds: tuple[float, float], step: float) -> Array:
    count = int(round((bounds[1] - bounds[0]) / step)) + 1
    return np.linspace(bounds[0], bounds[1], max(count, 2))


def _interval_residual(grad: Array, values: Array, bounds: tuple[float, float], bounded: bool) -> Array:
    # dist(0, grad + N_[a, b](v)) with the endpoints taken as the first and last grid values.
    residual = np.abs(grad)
    if bounded:
        at_lower = values <= bounds[0]
        at_upper = values >= bounds[1]
        residual = np.where(at_lower, np.maximum(-grad, 0.0), residual)
        residual = np.where(at_upper, np.maximum(grad, 0.0), residual)
    return residual


def _prox_points(toy: ToyProblem2D, xs: Array, r: float) -> Array:
    # The prox objective is strongly convex in one variable: bisect on the sign of a subgradient.
    lo = np.full_like(xs, toy.x_bounds[0])
    hi = np.full_like(xs, toy.x_bounds[1])
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        slope = toy.grad_x(mid, toy.witness(mid)) + r * (mid - xs)
        positive = slope > 0.0
        hi = np.where(positive, mid, hi)
        lo = np.where(positive, lo, mid)
    return 0.5 * (lo + hi)


def _cluster(score: Array, tol: float, xs: Array, ys: Array) -> tuple[StationaryCluster, ...]:
    labels, count = ndimage.label(score <= tol, structure=_CONNECTIVITY)
    if count == 0:
        return ()
    index = np.arange(1, count + 1)
    positions = ndimage.minimum_position(score, labels, index)
    sizes = ndimage.sum_labels(np.ones_like(score), labels, index)
    clusters = []
    for (i, j), extent, size in zip(positions, ndimage.find_objects(labels), sizes, strict=True):
        rows, cols = extent
        clusters.append(
            StationaryCluster(
                x=float(xs[i]),
                y=float(ys[j]),
                score=float(score[i, j]),
                x_range=(float(xs[rows.start]), float(xs[rows.stop - 1])),
                y_range=(float(ys[cols.start]), float(ys[cols.stop - 1])),
                size=int(size),
            )
        )
    return tuple(sorted(clusters, key=lambda c: (c.x, c.y)))


def enumerate_stationary_sets(toy: ToyProblem2D, grid_step: float = 1e-3, tol: float = 1e-2) -> StationarySets:
    """Cluster the grid points that are minimax, game stationary or optimization stationary.

    * MP: ``f(x) <= min f + tol`` and ``F(x, y) >= f(x) - tol`` with ``f`` the
      maximum of ``F(x, .)`` over the ``y`` grid.
    * GS: both normal-cone residuals ``dist(0, grad_x F + N_X)`` and
      ``dist(0, -grad_y F + N_Y)`` at most ``tol``.
    * OS: ``r |x - prox_{f/r}(x)| <= tol`` with ``r = 3 L_c`` together with
      ``F(x, y) >= f(x) - tol``.

    Toys with unbounded ``X`` are enumerated on their truncation box, whose
    edges are not treated as boundary for the GS residual.

    Raises:
        ParameterError: If ``grid_step`` or ``tol`` is not positive.
    """

    if not (grid_step > 0 and tol > 0):
        raise ParameterError("grid_step and tol must be positive")
    xs, ys = _axis(toy.x_bounds, grid_step), _axis(toy.y_bounds, grid_step)
    LOGGER.info("Enumerating %s on a %dx%d grid", toy.identifier, xs.size, ys.size)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")

    values = toy.value(gx, gy)
    f_grid = values.max(axis=1)
    attainment = f_grid[:, None] - values

    mp_score = np.maximum((f_grid - f_grid.min())[:, None], attainment)

    gs_primal = _interval_residual(toy.grad_x(gx, gy), gx, toy.x_bounds, bounded=not toy.truncated)
    gs_dual = _interval_residual(-toy.grad_y(gx, gy), gy, toy.y_bounds, bounded=True)
    gs_score = np.maximum(gs_primal, gs_dual)
    del gs_primal, gs_dual

    r = 3.0 * toy.lipschitz_c
    os_primal = r * np.abs(xs - _prox_points(toy, xs, r))
    os_score = np.maximum(os_primal[:, None], attainment)

    result = StationarySets(
        toy=toy.identifier,
        mp=_cluster(mp_score, tol, xs, ys),
        gs=_cluster(gs_score, tol, xs, ys),
        os=_cluster(os_score, tol, xs, ys),
        grid_step=grid_step,
        tol=tol,
        truncated=toy.truncated,
    )
    LOGGER.info(
        "%s: %d MP, %d GS, %d OS clusters", toy.identifier, len(result.mp), len(result.gs), len(result.os)
    )
    return result


def matches_reference(
    clusters: Sequence[StationaryCluster], reference: Sequence[Component], radius: float
) -> bool:
    """Whether clusters and reference components pair up one-to-one within ``radius``.

    A segment component must also be covered by its cluster's extent.
    """

    if len(clusters) != len(reference):
        return False
    unused = list(clusters)
    for component in reference:
        match = None
        for cluster in unused:
            near = component.distance(cluster.x, cluster.y) <= radius
            covers = (
                cluster.x_range[0] <= component.x[0] + radius
                and cluster.x_range[1] >= component.x[1] - radius
                and cluster.y_range[0] <= component.y[0] + radius
                and cluster.y_range[1] >= component.y[1] - radius
            )
            if near and covers:
                match = cluster
                break
        if match is None:
            return False
        unused.remove(match)
    return True


def check_stationary_sets(
    toy: ToyProblem2D, grid_step: float = 1e-3, tol: float = 1e-2, radius_factor: float = 2.0
) -> list[CheckReport]:
    """Compare the enumerated MP, GS and OS clusters with the toy's reference sets.

    The ratio is the largest distance from a reference component to its
    nearest cluster over ``radius_factor * grid_step``; a count or coverage
    mismatch makes it infinite.
    """

    sets = enumerate_stationary_sets(toy, grid_step, tol)
    radius = radius_factor * grid_step
    reports = []
    for kind in ("mp", "gs", "os"):
        clusters, reference = sets.clusters(kind), toy.reference(kind)
        worst = max(
            (min((c.distance(cl.x, cl.y) for cl in clusters), default=math.inf) / radius for c in reference),
            default=0.0,
        )
        if not matches_reference(clusters, reference, radius):
            worst = math.inf
        report = CheckReport(
            name=f"stationary_sets[{toy.identifier}:{kind}]",
            instances=len(reference),
            worst_ratio=worst,
            details={"clusters": [c.as_dict() for c in clusters], "reference": [{"x": list(c.x), "y": list(c.y)} for c in reference]},
        )
        level = logging.INFO if report.passed else logging.WARNING
        LOGGER.log(level, "%s: %d clusters for %d reference components", report.name, len(clusters), len(reference))
        reports.append(report)
    return reports
