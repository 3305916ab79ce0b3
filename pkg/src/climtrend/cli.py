"""Command-line interface.

One executable, ten subcommands, one JSON config file::

    climtrend fit --config fit.json --out reports --seed 1880
    climtrend calibrate --config cal.json --override replicates=500

Every subcommand reads a strict, schema-versioned JSON config (unknown
keys are rejected; validation reports every problem, not just the first),
materializes all defaults, echoes the effective config into the report,
and dispatches to the corresponding experiment recipe.  ``--dry-run``
prints the effective config without computing anything.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, experiments
from .exceptions import DataError, NumericalError, UnusableSampleError
from .experiments import (
    CALIBRATION_DEFAULTS,
    ENSEMBLE_DEFAULTS,
    HISTORICAL_DEFAULTS,
    LEARNING_DEFAULTS,
    PROJECTION_DEFAULTS,
    SCALING_DEFAULTS,
    TCR_DEFAULTS,
    ExperimentConfig,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so we control exit codes."""

    def error(self, message):
        raise _UsageError(message)


# subcommand -> (recipe, default replicates, override defaults)
COMMANDS = {
    "fit": (experiments.run_historical_fit, 1000, HISTORICAL_DEFAULTS),
    "project": (experiments.run_projection, 0, PROJECTION_DEFAULTS),
    "bootstrap": (experiments.run_bootstrap, 1000, experiments.BOOTSTRAP_DEFAULTS),
    "learn": (experiments.run_learning_curve, 500, LEARNING_DEFAULTS),
    "calibrate": (experiments.run_calibration_study, 2000, CALIBRATION_DEFAULTS),
    "spectrum": (None, 0, {}),
    "simulate": (None, 0, {}),
    "tcr": (experiments.run_tcr_report, 0, TCR_DEFAULTS),
    "scale-forcing": (experiments.run_forcing_scaling, 0, SCALING_DEFAULTS),
    "ensemble": (experiments.run_ensemble_refit, 0, ENSEMBLE_DEFAULTS),
}

_INPUT_KEYS = {
    "temperature", "temperature_format", "forcing", "forcing_columns",
    "scenario", "scenario_columns", "fit_report", "ensemble_dir", "model",
    "series",
}


def validate_config(config, command: str):
    """Validate and normalize a config mapping for one subcommand.

    Returns ``(normalized_config, errors)``; ``errors`` is an exhaustive
    list of problems (empty when the config is valid).  All defaults are
    materialized into the returned mapping.
    """
    errors: list[str] = []
    if not isinstance(config, dict):
        return None, [f"config root must be a JSON object, got {type(config).__name__}"]
    if command not in COMMANDS:
        return None, [f"unknown subcommand {command!r}"]
    _, default_replicates, override_defaults = COMMANDS[command]

    known = {"schema_version", "name", "seed", "replicates", "output_dir",
             "threads", "inputs", "overrides"}
    for key in sorted(set(config) - known):
        errors.append(f"unknown config key {key!r}")

    if "schema_version" not in config:
        errors.append("missing required field 'schema_version'")
    elif config["schema_version"] != SCHEMA_VERSION:
        errors.append(
            f"unsupported schema_version {config['schema_version']!r} (expected {SCHEMA_VERSION})"
        )

    if "seed" not in config:
        errors.append("missing required field 'seed' (experiments must be explicitly seeded)")
    elif not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
        errors.append(f"'seed' must be an integer, got {config['seed']!r}")

    replicates = config.get("replicates", default_replicates)
    if not isinstance(replicates, int) or isinstance(replicates, bool) or replicates < 0:
        errors.append(f"'replicates' must be a nonnegative integer, got {config.get('replicates')!r}")

    name = config.get("name", command.replace("-", "_"))
    if not isinstance(name, str) or not name:
        errors.append(f"'name' must be a nonempty string, got {name!r}")

    output_dir = config.get("output_dir", "reports")
    if not isinstance(output_dir, str) or not output_dir:
        errors.append(f"'output_dir' must be a nonempty string, got {output_dir!r}")

    threads = config.get("threads", os.cpu_count() or 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        errors.append(f"'threads' must be a positive integer, got {config.get('threads')!r}")

    inputs = config.get("inputs", {})
    if not isinstance(inputs, dict):
        errors.append(f"'inputs' must be an object, got {inputs!r}")
        inputs = {}
    else:
        for key in sorted(set(inputs) - _INPUT_KEYS):
            errors.append(f"unknown inputs key {key!r} (known: {sorted(_INPUT_KEYS)})")

    overrides = config.get("overrides", {})
    if not isinstance(overrides, dict):
        errors.append(f"'overrides' must be an object, got {overrides!r}")
        overrides = {}
    else:
        for key in sorted(set(overrides) - set(override_defaults)):
            errors.append(
                f"unknown override {key!r} for {command} "
                f"(known: {sorted(override_defaults)})"
            )
        if "rho_max" in overrides:
            rho_max = overrides["rho_max"]
            if not isinstance(rho_max, (int, float)) or not 0 < rho_max < 1:
                errors.append(f"override 'rho_max' must be in (0, 1), got {rho_max!r}")
        if "f2x" in overrides:
            f2x = overrides["f2x"]
            if not isinstance(f2x, (int, float)) or not f2x > 0:
                errors.append(f"override 'f2x' must be positive, got {f2x!r}")

    effective = dict(override_defaults)
    effective.update(overrides)
    normalized = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "seed": config.get("seed"),
        "replicates": replicates,
        "output_dir": output_dir,
        "threads": threads,
        "inputs": inputs,
        "overrides": experiments._jsonable(effective),
    }
    return normalized, errors


def _parse_override_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _apply_cli_overrides(config: dict, pairs) -> list:
    errors = []
    for pair in pairs or ():
        if "=" not in pair:
            errors.append(f"--override expects key=value, got {pair!r}")
            continue
        key, _, raw = pair.partition("=")
        target = config
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                errors.append(f"--override {key!r}: {part!r} is not an object")
                break
        else:
            target[parts[-1]] = _parse_override_value(raw)
    return errors


def build_parser() -> _Parser:
    parser = _Parser(prog="climtrend",
                     description="Forced temperature-trend estimation and calibration studies")
    parser.add_argument("--version", action="version", version=f"climtrend {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for command in COMMANDS:
        p = sub.add_parser(command, help=f"run the {command} recipe")
        p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
        p.add_argument("--override", action="append", metavar="K=V",
                       help="override a config key (repeatable, dotted keys allowed)")
        p.add_argument("--json-errors", action="store_true",
                       help="emit machine-readable JSON on data/numerical errors")
        p.add_argument("--dry-run", action="store_true",
                       help="print the effective config and exit without computing")
    return parser


def _run_spectrum(cfg: ExperimentConfig):
    from .noise import ArfimaModel, arfima_spectral_density, periodogram as _pgram
    from .reports import ReportWriter
    from . import figures
    import numpy as np
    from .series import parse_temperature_csv

    model_path = cfg.inputs.get("model")
    if not model_path:
        raise DataError("spectrum needs inputs.model (a JSON model file)")
    with open(model_path, "r", encoding="utf-8") as fh:
        model = ArfimaModel.from_dict(json.load(fh))
    writer = ReportWriter(cfg.output_dir, cfg.name, cfg.to_dict(),
                          inputs={"model": model_path})
    omegas = np.pi * np.arange(1, 513) / 512
    spec = arfima_spectral_density(model, omegas)
    writer.write_table("spectrum.csv", ["frequency", "power"],
                       zip(spec.frequencies, spec.power))
    entries = {"model": (spec.frequencies, spec.power)}
    if cfg.inputs.get("series"):
        series = parse_temperature_csv(cfg.inputs["series"], format="plain_two_column")
        pg = _pgram(series)
        writer.write_table("periodogram.csv", ["frequency", "ordinate"],
                           zip(pg.frequencies, pg.ordinates))
        entries["periodogram"] = (pg.frequencies, pg.ordinates)
    writer.save_figure("spectrum.png", figures.spectra_figure(entries))
    summary = {"model": model.to_dict(), "n_frequencies": len(omegas)}
    writer.finalize(summary)
    return experiments.ExperimentResult(writer.directory, summary)


def _run_simulate(cfg: ExperimentConfig):
    from .noise import ArfimaModel, simulate
    from .reports import ReportWriter
    from . import figures
    import matplotlib.pyplot as plt

    model_path = cfg.inputs.get("model")
    if not model_path:
        raise DataError("simulate needs inputs.model (a JSON model file)")
    with open(model_path, "r", encoding="utf-8") as fh:
        model = ArfimaModel.from_dict(json.load(fh))
    n = cfg.replicates if cfg.replicates > 0 else 136
    writer = ReportWriter(cfg.output_dir, cfg.name, cfg.to_dict(),
                          inputs={"model": model_path})
    path = simulate(model, n, seed=cfg.seed)
    writer.write_table("simulated.csv", ["index", "value"],
                       zip(range(1, n + 1), path.values))
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(path.values, lw=0.9, color="0.3")
    ax.set_xlabel("time step")
    ax.set_ylabel("value")
    fig.tight_layout()
    writer.save_figure("simulated.png", fig)
    summary = {"model": model.to_dict(), "n": n}
    writer.finalize(summary)
    return experiments.ExperimentResult(writer.directory, summary)


def _dispatch(command: str, cfg: ExperimentConfig):
    if command == "spectrum":
        return _run_spectrum(cfg)
    if command == "simulate":
        return _run_simulate(cfg)
    recipe = COMMANDS[command][0]
    return recipe(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    raw_config = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw_config = json.load(fh)
        except FileNotFoundError:
            print(f"error: config file not found: {args.config}", file=sys.stderr)
            return EXIT_DATA
        except json.JSONDecodeError as exc:
            print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
            return EXIT_DATA
    else:
        raw_config = {"schema_version": SCHEMA_VERSION, "seed": 1880}

    usage_errors = _apply_cli_overrides(raw_config, args.override)
    if args.seed is not None:
        raw_config["seed"] = args.seed
    if args.out is not None:
        raw_config["output_dir"] = args.out
    if args.threads is not None:
        raw_config["threads"] = args.threads

    config, errors = validate_config(raw_config, args.command)
    errors = usage_errors + errors
    if errors:
        for err in errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE

    if args.dry_run:
        print(json.dumps(config, indent=1, sort_keys=True))
        return EXIT_OK

    cfg = ExperimentConfig(
        name=config["name"],
        seed=config["seed"],
        replicates=config["replicates"],
        output_dir=config["output_dir"],
        inputs=config["inputs"],
        overrides={k: v for k, v in config["overrides"].items()},
        threads=config["threads"],
    )
    try:
        result = _dispatch(args.command, cfg)
    except (DataError, FileNotFoundError, UnusableSampleError) as exc:
        _report_error(exc, EXIT_DATA, args.json_errors)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        _report_error(exc, EXIT_NUMERICAL, args.json_errors)
        return EXIT_NUMERICAL
    except ValueError as exc:
        _report_error(exc, EXIT_DATA, args.json_errors)
        return EXIT_DATA
    print(f"report written to {result.directory}")
    return EXIT_OK


def _report_error(exc: Exception, code: int, as_json: bool) -> None:
    if as_json:
        print(json.dumps({
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        }, sort_keys=True))
    else:
        print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
