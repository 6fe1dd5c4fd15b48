from __future__ import annotations

import logging
import threading
import time

import pytest

from plda_minimax import runtime


def test_configure_logging_uses_basic_config(monkeypatch: pytest.MonkeyPatch) -> None:
    captured: dict[str, object] = {}

    def fake_basic_config(**kwargs: object) -> None:
        captured.update(kwargs)

    monkeypatch.setattr(logging, "basicConfig", fake_basic_config)

    runtime.configure_logging("DEBUG")

    assert captured["level"] == "DEBUG"
    assert "%(asctime)s" in str(captured["format"])


def test_gather_runs_keeps_submission_order() -> None:
    def job(index: int) -> int:
        # Later jobs finish first.
        time.sleep(0.01 * (4 - index))
        return index

    jobs = [lambda i=i: job(i) for i in range(4)]

    assert runtime.gather_runs(jobs, runtime.WorkerSettings(max_workers=4)) == [0, 1, 2, 3]


def test_gather_runs_uses_worker_threads() -> None:
    names = runtime.gather_runs([lambda: threading.current_thread().name] * 3, runtime.WorkerSettings(max_workers=2))

    assert len(names) == 3
    assert threading.main_thread().name not in names


def test_gather_runs_serial_and_invalid_settings() -> None:
    assert runtime.gather_runs([lambda: 1, lambda: 2], runtime.WorkerSettings(max_workers=1)) == [1, 2]
    assert runtime.gather_runs([]) == []
    with pytest.raises(ValueError):
        runtime.gather_runs([lambda: 1], runtime.WorkerSettings(max_workers=0))
