"""``toy``: brute-force stationary sets of one two-dimensional toy."""

from __future__ import annotations

from ..errors import PldaError, to_error
from ..schemas import RunConfig
from ..verification import enumerate_stationary_sets, get_toy


def toy(config: RunConfig) -> dict[str, object]:
    """Enumerate the MP, GS and OS clusters of ``config.toy_id`` on a ``grid_step`` grid."""

    try:
        return enumerate_stationary_sets(get_toy(config.toy_id), config.grid_step).as_dict()
    except PldaError as exc:
        return to_error(exc)


def format_clusters(payload: dict[str, object]) -> str:
    """Plain-text listing, one line per cluster."""

    lines = [f"toy {payload['toy']} (grid step {payload['grid_step']:g}, tol {payload['tol']:g})"]
    for kind in ("mp", "gs", "os"):
        clusters = payload[kind]
        assert isinstance(clusters, list)
        points = ", ".join(_describe(cluster) for cluster in clusters) or "none"
        lines.append(f"{kind.upper()} = {{{points}}}")
    return "\n".join(lines)


def _fmt(value: float) -> str:
    return f"{round(value, 3) + 0.0:.3f}"


def _describe(cluster: dict[str, object]) -> str:
    point, x_range, y_range = cluster["point"], cluster["x_range"], cluster["y_range"]
    assert isinstance(point, list) and isinstance(x_range, list) and isinstance(y_range, list)
    return (
        f"({_fmt(point[0])},{_fmt(point[1])}) "
        f"x in [{_fmt(x_range[0])},{_fmt(x_range[1])}] y in [{_fmt(y_range[0])},{_fmt(y_range[1])}]"
    )
