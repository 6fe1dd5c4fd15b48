"""Runtime utilities: logging setup and fan-out of independent runs."""

from __future__ import annotations

import functools
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TypeVar, cast

import anyio

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass
class WorkerSettings:
    """Concurrency settings for ``bench`` and ``verify`` fan-out."""

    max_workers: int = 4


def configure_logging(level: int | str = logging.INFO) -> None:
    """Initialize logging for CLI runs."""

    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )


def gather_runs(jobs: Sequence[Callable[[], T]], settings: WorkerSettings | None = None) -> list[T]:
    """Run independent jobs on worker threads and return results in submission order.

    Each job owns its own state (one solver run, one check), so results do not
    depend on scheduling; aggregation is by index.
    """

    settings = settings or WorkerSettings()
    if settings.max_workers < 1:
        raise ValueError("max_workers must be >= 1")
    if settings.max_workers == 1 or len(jobs) <= 1:
        return [job() for job in jobs]

    results: list[T | None] = [None] * len(jobs)

    async def _runner() -> None:
        limiter = anyio.CapacityLimiter(settings.max_workers)

        async def _one(index: int, job: Callable[[], T]) -> None:
            results[index] = await anyio.to_thread.run_sync(job, limiter=limiter)

        async with anyio.create_task_group() as tg:
            for index, job in enumerate(jobs):
                tg.start_soon(functools.partial(_one, index, job))

    anyio.run(_runner)
    LOGGER.debug("Completed %d jobs with %d workers", len(jobs), settings.max_workers)
    return cast(list[T], results)
