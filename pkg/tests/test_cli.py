"""CLI contract tests for the plda-minimax entrypoint."""

from __future__ import annotations

import importlib
import json
import math
from pathlib import Path

import pytest

from plda_minimax import main as cli_main
from plda_minimax.baselines import final_objective
from plda_minimax.commands.common import build_problem
from plda_minimax.errors import ConfigError
from plda_minimax.schemas import CheckReport, RunConfig, TraceRecord
from plda_minimax.smoothed_plda import IterateTrace

verify_module = importlib.import_module("plda_minimax.commands.verify")
bench_module = importlib.import_module("plda_minimax.commands.bench")


def _resolve(*argv: str) -> RunConfig:
    return cli_main.resolve_config(cli_main.build_parser().parse_args(list(argv)))


def _stub_suite(monkeypatch: pytest.MonkeyPatch, worst_ratio: float) -> None:
    report = CheckReport(name="stub", instances=1, worst_ratio=worst_ratio)
    monkeypatch.setitem(verify_module.SUITE_JOBS, "toys", lambda config: [lambda: [report]])


def test_defaults_resolve_to_a_theory_run() -> None:
    config = _resolve("solve")

    assert config.command == "solve"
    assert config.problem.family == "bilinear"
    assert config.params.source == "theory"
    assert config.horizon == 200
    assert config.inner.on_nonconvergence == "warn"


def test_alpha_or_beta_imply_explicit_parameters() -> None:
    config = _resolve("solve", "--alpha", "0.01", "--beta", "0.1", "--lambda", "2")

    assert config.params.source == "explicit"
    assert config.params.lam == 2.0


def test_flags_override_the_config_file(tmp_path: Path) -> None:
    path = tmp_path / "run.ini"
    path.write_text(
        "[run]\nhorizon = 7\nseed = 3\n\n[problem]\nfamily = linreg-wdro\nn = 12\n\n"
        "[params]\nlambda = 2.0\nalpha = 0.01\nbeta = 0.1\n",
        encoding="utf-8",
    )

    config = _resolve("solve", "--config", str(path), "--horizon", "9")

    assert config.horizon == 9
    assert config.seed == 3
    assert config.problem.family == "linreg-wdro"
    assert config.problem.n == 12
    assert config.params.lam == 2.0
    assert config.params.source == "explicit"


def test_unknown_section_and_key_are_config_errors(tmp_path: Path) -> None:
    section = tmp_path / "section.ini"
    section.write_text("[solver]\nhorizon = 3\n", encoding="utf-8")
    key = tmp_path / "key.ini"
    key.write_text("[problem]\nbogus = 1\n", encoding="utf-8")

    with pytest.raises(ConfigError) as exc:
        _resolve("solve", "--config", str(section))
    assert exc.value.field == "solver"
    with pytest.raises(ConfigError) as exc:
        _resolve("solve", "--config", str(key))
    assert exc.value.field == "problem.bogus"


def test_invalid_value_exits_with_error_envelope(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_main.main(["solve", "--n", "0"]) == cli_main.EXIT_ERROR

    payload = json.loads(capsys.readouterr().err)
    assert payload["error"]["type"] == "ConfigError"
    assert payload["error"]["details"] == {"field": "problem.n"}


def test_toy_prints_clusters(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_main.main(["toy", "--id", "bilinear", "--grid", "0.01"]) == cli_main.EXIT_OK

    output = capsys.readouterr().out
    assert output.startswith("toy bilinear")
    assert "GS = {(0.000,0.000)" in output


def test_solve_writes_trace_objective_and_summary(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_main.main(["solve", "--problem", "bilinear", "-K", "10", "--stride", "0", "--output-dir", str(tmp_path)])

    assert code == cli_main.EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["iterations"] == 10
    trace = (tmp_path / "solve-bilinear-plda-seed0.csv").read_text(encoding="utf-8").splitlines()
    assert len(trace) == 12
    summary = json.loads((tmp_path / "solve-bilinear-plda-seed0.json").read_text(encoding="utf-8"))
    assert summary["method"] == "plda"
    assert summary["parameters"]["r"] == pytest.approx(3.0)
    assert (tmp_path / "solve-bilinear-plda-seed0-objective.csv").exists()


def test_forced_weight_below_lipschitz_reports_undefined_constants(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    argv = ["solve", "-K", "5", "--r", "0.5", "--alpha", "0.1", "--beta", "0.1", "--output-dir", str(tmp_path)]

    assert cli_main.main(argv) == cli_main.EXIT_ERROR
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "ParameterError"

    assert cli_main.main([*argv, "--force"]) == cli_main.EXIT_OK
    summary = json.loads((tmp_path / "solve-bilinear-plda-seed0.json").read_text(encoding="utf-8"))
    assert summary["parameters"]["zeta"] is None
    assert summary["parameters"]["forced"] is True


def test_bench_writes_one_row_per_method(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_main.main(["bench", "--problem", "bilinear", "-K", "5", "--output-dir", str(tmp_path), "--workers", "1"])

    assert code == cli_main.EXIT_OK
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [row["method"] for row in rows] == ["plda", "sgda", "subgrad"]
    table = (tmp_path / "bench-bilinear-table-seed0.csv").read_text(encoding="utf-8").splitlines()
    assert table[0] == "method,problem,step,iterations,final_objective,best_objective,oracle_calls,oracle_budget"
    assert len(table) == 4


def test_bench_methods_share_one_oracle_budget(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = cli_main.main(["bench", "--problem", "bilinear", "-K", "5", "--output-dir", str(tmp_path), "--workers", "1"])

    assert code == cli_main.EXIT_OK
    plda, *baselines = json.loads(capsys.readouterr().out)["rows"]
    budget = plda["oracle_budget"]
    assert budget >= 1
    assert plda["oracle_calls"] == budget
    for row in baselines:
        assert row["oracle_budget"] == budget
        assert row["oracle_calls"] >= budget


def test_configured_oracle_budget_caps_every_method(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _resolve("bench", "--oracle-budget", "40").oracle_budget == 40
    with pytest.raises(ConfigError):
        _resolve("bench", "--oracle-budget", "0")

    argv = ["bench", "--problem", "bilinear", "-K", "500", "--oracle-budget", "40", "--output-dir", str(tmp_path)]
    assert cli_main.main([*argv, "--workers", "1"]) == cli_main.EXIT_OK
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert {row["oracle_budget"] for row in rows} == {40}
    assert all(row["oracle_calls"] >= 40 for row in rows)
    assert all(row["iterations"] < 500 for row in rows)


def test_bench_step_tuning_skips_a_diverging_step(monkeypatch: pytest.MonkeyPatch) -> None:
    real_run = bench_module.run_method

    def diverging(config: RunConfig, built: object, step: float | None = None, **kwargs: object) -> object:
        trace, best, extra = real_run(config, built, step, **kwargs)
        if step == 1.0:
            trace.records[-1] = trace.records[-1].model_copy(update={"F": math.nan, "objective": math.nan})
        return trace, best, extra

    monkeypatch.setattr(bench_module, "run_method", diverging)
    config = _resolve("bench", "--problem", "bilinear", "-K", "5", "--workers", "1")
    built = build_problem(config.problem, config.seed)

    for trace, _, step in bench_module.compare_methods(config, built)[1:]:
        assert step != 1.0
        assert math.isfinite(final_objective(trace))


def test_bench_row_skips_non_finite_objectives() -> None:
    records = [TraceRecord(k=0, F=math.nan), TraceRecord(k=1, F=2.0), TraceRecord(k=2, F=1.0)]
    trace = IterateTrace(records=records, metadata={"oracle_calls": 7, "oracle_budget": 5})

    row = bench_module.bench_row("sgda", "bilinear", trace, 0.5)

    assert row.best_objective == 1.0
    assert row.final_objective == 1.0
    assert (row.oracle_calls, row.oracle_budget) == (7, 5)


def test_verify_exit_status_follows_the_checks(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    argv = ["verify", "--suite", "toys", "--output-dir", str(tmp_path)]

    _stub_suite(monkeypatch, worst_ratio=0.5)
    assert cli_main.main(argv) == cli_main.EXIT_OK
    first = (tmp_path / "verify-toys-seed0.json").read_text(encoding="utf-8")
    assert cli_main.main(argv) == cli_main.EXIT_OK
    assert (tmp_path / "verify-toys-seed0.json").read_text(encoding="utf-8") == first

    _stub_suite(monkeypatch, worst_ratio=2.0)
    assert cli_main.main(argv) == cli_main.EXIT_FAILED_CHECKS
    report = json.loads((tmp_path / "verify-toys-seed0.json").read_text(encoding="utf-8"))
    assert report["passed"] is False
    assert report["check_reports"][0]["name"] == "stub"
