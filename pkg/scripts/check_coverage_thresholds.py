"""Enforce coverage floors from pytest-cov JSON output.

The total floor applies to the whole package; the solver core (the modules a
wrong number would come from) has its own, higher floor per file.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

DEFAULT_MINIMUM = 80.0
CORE_MINIMUM = 90.0
CORE_MODULES = (
    "convex_sets.py",
    "problem_model.py",
    "prox_linear.py",
    "smoothed_plda.py",
    "stationarity.py",
)


def _file_percents(payload: dict[str, object]) -> dict[str, float]:
    files = payload["files"]
    assert isinstance(files, dict)
    return {Path(name).name: float(info["summary"]["percent_covered"]) for name, info in files.items()}


def main() -> int:
    """Validate total and per-module coverage against the configured floors."""
    parser = argparse.ArgumentParser()
    parser.add_argument("--coverage-json", required=True)
    parser.add_argument("--minimum", type=float, default=DEFAULT_MINIMUM)
    parser.add_argument("--core-minimum", type=float, default=CORE_MINIMUM)
    args = parser.parse_args()

    payload = json.loads(Path(args.coverage_json).read_text(encoding="utf-8"))
    total = float(payload["totals"]["percent_covered"])
    failures = []
    if total < args.minimum:
        failures.append(f"total {total:.2f}% < {args.minimum:.2f}%")
    per_file = _file_percents(payload)
    for module in CORE_MODULES:
        percent = per_file.get(module, 0.0)
        if percent < args.core_minimum:
            failures.append(f"{module} {percent:.2f}% < {args.core_minimum:.2f}%")
    if failures:
        raise SystemExit("Coverage below the floor: " + "; ".join(failures))
    print(f"Coverage {total:.2f}% meets the floors.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
