"""Command implementations behind the CLI; each takes a :class:`RunConfig` and returns a payload dict."""

from .bench import bench
from .solve import solve
from .toy import format_clusters, toy
from .verify import verify

__all__ = ["bench", "format_clusters", "solve", "toy", "verify"]
