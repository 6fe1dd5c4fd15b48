"""Command-line entry point for plda-minimax."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .commands import bench, format_clusters, solve, toy, verify
from .commands.common import dump_json
from .errors import ConfigError, to_error
from .runtime import configure_logging
from .schemas import RunConfig

LOGGER = logging.getLogger(__name__)

COMMANDS = {"solve": solve, "bench": bench, "verify": verify, "toy": toy}
SECTIONS = ("run", "problem", "params", "inner")
EXIT_OK, EXIT_FAILED_CHECKS, EXIT_ERROR = 0, 1, 2

# Flag destination -> (config section, field name); "run" fields live at the top level.
FLAG_FIELDS: dict[str, tuple[str, str]] = {
    "family": ("problem", "family"),
    "n": ("problem", "n"),
    "d": ("problem", "d"),
    "rho": ("problem", "rho"),
    "p": ("problem", "p"),
    "data_path": ("problem", "data_path"),
    "data_mode": ("problem", "data_mode"),
    "trust_radius": ("problem", "trust_radius"),
    "source": ("params", "source"),
    "regime": ("params", "regime"),
    "r": ("params", "r"),
    "lam": ("params", "lam"),
    "alpha": ("params", "alpha"),
    "beta": ("params", "beta"),
    "force": ("params", "force"),
    "gda_step": ("params", "gda_step"),
    "inner_method": ("inner", "method"),
    "inner_target": ("inner", "target"),
    "inner_max_iters": ("inner", "max_iters"),
    "adaptive_inner": ("inner", "adaptive"),
    "on_nonconvergence": ("inner", "on_nonconvergence"),
    "method": ("run", "method"),
    "horizon": ("run", "horizon"),
    "seed": ("run", "seed"),
    "stride": ("run", "stride"),
    "output_dir": ("run", "output_dir"),
    "suite": ("run", "suite"),
    "toy_id": ("run", "toy_id"),
    "grid_step": ("run", "grid_step"),
    "workers": ("run", "workers"),
    "oracle_budget": ("run", "oracle_budget"),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="INI file with [run], [problem], [params] and [inner] sections.")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", dest="output_dir", help="Directory for artifacts (default: runs).")
    parser.add_argument("--workers", type=int, help="Worker threads for independent runs.")
    parser.add_argument("--log-level", dest="log_level", default="INFO", help="Logging level.")


def _add_problem(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--problem", dest="family", help="Problem family, e.g. linreg-wdro or bilinear.")
    group.add_argument("--n", type=int, help="Number of samples (WDRO families).")
    group.add_argument("--d", type=int, help="Feature or variable dimension.")
    group.add_argument("--rho", type=float, help="Variation-regularization weight.")
    group.add_argument("--p", help="Gradient norm: 1, 2 or inf.")
    group.add_argument("--data-path", dest="data_path", help="LIBSVM file instead of synthetic data.")
    group.add_argument("--data-mode", dest="data_mode", choices=("planted", "independent"))
    group.add_argument("--trust-radius", dest="trust_radius", type=float)


def _add_solver(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("parameters")
    group.add_argument("--horizon", "-K", dest="horizon", type=int, help="Number of outer steps.")
    group.add_argument("--stride", type=int, help="Diagnostic stride (0 disables diagnostics).")
    group.add_argument(
        "--params",
        dest="source",
        choices=("theory", "explicit"),
        help="Parameter source; explicit is implied by --alpha or --beta.",
    )
    group.add_argument("--regime", choices=("general", "kl"))
    group.add_argument("--r", type=float)
    group.add_argument("--lambda", dest="lam", type=float)
    group.add_argument("--alpha", type=float)
    group.add_argument("--beta", type=float)
    group.add_argument("--force", action="store_true", default=None, help="Accept values outside the theory ranges.")
    group.add_argument("--gda-step", dest="gda_step", type=float, help="Primal step of smoothed GDA.")
    inner = parser.add_argument_group("inner solver")
    inner.add_argument(
        "--inner-method",
        dest="inner_method",
        choices=(
            "auto",
            "closed_form",
            "projected_subgradient_averaging",
            "accelerated_projected_gradient",
            "dual_projected_gradient",
        ),
    )
    inner.add_argument("--inner-target", dest="inner_target", type=float)
    inner.add_argument("--inner-max-iters", dest="inner_max_iters", type=int)
    inner.add_argument("--adaptive-inner", dest="adaptive_inner", action="store_true", default=None)
    inner.add_argument("--on-nonconvergence", dest="on_nonconvergence", choices=("raise", "warn"))


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the plda-minimax CLI."""
    parser = argparse.ArgumentParser(
        prog="plda-minimax", description="Smoothed proximal linear descent ascent for nonsmooth minimax problems"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_parser = sub.add_parser("solve", help="Run one method and write a trace CSV and a JSON summary.")
    _add_common(solve_parser)
    _add_problem(solve_parser)
    _add_solver(solve_parser)
    solve_parser.add_argument("--method", choices=("plda", "sgda", "subgrad"))

    bench_parser = sub.add_parser("bench", help="Compare PLDA with grid-searched baselines.")
    _add_common(bench_parser)
    _add_problem(bench_parser)
    _add_solver(bench_parser)
    bench_parser.add_argument(
        "--oracle-budget",
        dest="oracle_budget",
        type=int,
        help="Oracle calls allowed to every method (default: what PLDA spends in K steps).",
    )

    verify_parser = sub.add_parser("verify", help="Run the numerical check battery.")
    _add_common(verify_parser)
    verify_parser.add_argument("--suite", choices=("all", "toys", "errors", "rates", "conversion", "wdro"))
    verify_parser.add_argument("--horizon", "-K", dest="horizon", type=int, help="Steps of the benchmark ordering.")
    verify_parser.add_argument("--grid", dest="grid_step", type=float, help="Enumeration grid step.")

    toy_parser = sub.add_parser("toy", help="Enumerate the stationary sets of a toy problem.")
    _add_common(toy_parser)
    toy_parser.add_argument("--id", dest="toy_id", choices=("cubic_quadratic", "sine_bilinear", "bilinear"))
    toy_parser.add_argument("--grid", dest="grid_step", type=float, help="Enumeration grid step.")
    return parser


def read_config_file(path: Path) -> dict[str, dict[str, str]]:
    """Sections of an INI config file as plain dictionaries.

    Raises:
        ConfigError: If the file is missing, malformed or has an unknown section.
    """

    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open(encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from exc
    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(name, f"unknown section; expected one of {', '.join(SECTIONS)}")
        values = dict(parser.items(name))
        if name == "params" and "lambda" in values:
            values["lam"] = values.pop("lambda")
        sections[name] = values
    return sections


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file with the flags given on the command line and validate.

    Raises:
        ConfigError: Naming the first invalid field.
    """

    sections = read_config_file(args.config) if args.config is not None else {}
    merged: dict[str, Any] = {name: dict(values) for name, values in sections.items() if name != "run"}
    merged.update({key: value for key, value in sections.get("run", {}).items() if key != "command"})
    for dest, (section, field) in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if section == "run":
            merged[field] = value
        else:
            merged.setdefault(section, {})[field] = value
    params = merged.setdefault("params", {})
    if "source" not in params and ("alpha" in params or "beta" in params):
        params["source"] = "explicit"
    merged["command"] = args.command
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(field, first["msg"]) from exc


def _emit_error(payload: dict[str, object]) -> int:
    print(dump_json(payload), file=sys.stderr)
    return EXIT_ERROR


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the command and map its outcome to an exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level.upper())

    try:
        config = resolve_config(args)
    except ConfigError as exc:
        return _emit_error(to_error(exc))

    payload = COMMANDS[config.command](config)
    if "error" in payload:
        return _emit_error(payload)
    if config.command == "toy":
        print(format_clusters(payload))
        return EXIT_OK
    print(dump_json(payload))
    if config.command == "verify" and not payload.get("passed", False):
        LOGGER.warning("verify: failed checks %s", payload.get("failed"))
        return EXIT_FAILED_CHECKS
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
