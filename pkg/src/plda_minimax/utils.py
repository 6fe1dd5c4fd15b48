"""Utility helpers shared across solvers, checks and commands."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from .errors import DimensionError
from .types import Vector

LOGGER = logging.getLogger(__name__)


def as_vector(value: object, dim: int | None = None, name: str = "vector") -> Vector:
    """Return ``value`` as a 1-D float64 array, optionally checking its length."""

    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def ordered_cartesian_product(values: Sequence[Sequence[object]]) -> list[list[object]]:
    """Return nested-loop ordering for a Cartesian product."""

    if not values:
        return []
    results: list[list[object]] = [[]]
    for group in values:
        next_results: list[list[object]] = []
        for prefix in results:
            for item in group:
                next_results.append(prefix + [item])
        results = next_results
    return results


def to_serializable(val: object) -> object:
    """Convert numpy values (recursively) to native Python for JSON serialization."""

    if isinstance(val, np.ndarray):
        return [to_serializable(v) for v in val.tolist()] if val.ndim else to_serializable(val.item())
    if isinstance(val, np.complexfloating):
        val = float(val.real)
    if isinstance(val, (float, np.floating)):
        return float(val) if np.isfinite(val) else None
    if isinstance(val, np.integer):
        return int(val)
    if isinstance(val, dict):
        return {str(k): to_serializable(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [to_serializable(v) for v in val]
    return val


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``log y = slope * log x + intercept``.

    Returns:
        ``(slope, intercept)``; both NaN when fewer than two positive pairs exist.
    """

    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if int(keep.sum()) < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope), float(intercept)
