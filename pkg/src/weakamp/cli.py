"""Command-line entry point: ``weakamp {fig2,fig3,sweep,oracle-check,calibration}``.

Exit codes: 0 success, 2 configuration error, 3 numeric/degenerate error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from weakamp.errors import ConfigError, WeakAmpError
from weakamp.scenario import PRESETS, Scenario, load_preset, parse_scenario
from weakamp.sweeps import (
    SweepTable,
    calibration_table,
    oracle_check,
    run_fig2_sweep,
    run_fig3_sweep,
    run_sweep,
    table_metadata,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakamp", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--scenario", type=Path, help="JSON scenario file")
    source.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    common.add_argument("--seed", type=int, help="override the detector RNG seed")
    common.add_argument("--out", type=Path, help="write here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--noise", choices=("on", "off"), default="off",
                        help="simulate detector noise and lock-in recovery")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig2", parents=[common], help="deflection vs detector beam size")
    sub.add_parser("fig3", parents=[common], help="mirror angle vs piezo drive")
    sub.add_parser("sweep", parents=[common], help="run the scenario's own sweep block")
    sub.add_parser("oracle-check", parents=[common], help="first-order vs exact dark-port model")
    sub.add_parser("calibration", parents=[common], help="piezo/mirror/kick chain table")
    return parser


def load_scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario is not None:
        try:
            text = args.scenario.read_text()
        except OSError as exc:
            raise ConfigError(str(exc), str(args.scenario)) from None
        scenario = parse_scenario(text)
    else:
        scenario = load_preset(args.preset or "dixon2009")
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
        scenario = dataclasses.replace(
            scenario, detector=dataclasses.replace(scenario.detector, seed=args.seed))
    return scenario


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _text(value) -> str:
    return value if isinstance(value, str) else repr(value)


def _render_mapping(doc: dict, fmt: str) -> str:
    doc = _json_safe(doc)
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    lines = ["key,value"]
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.extend(f"{key}.{k},{_text(v)}" for k, v in value.items())
        else:
            lines.append(f"{key},{_text(value)}")
    return "\n".join(lines) + "\n"


def run(args: argparse.Namespace) -> str:
    scenario = load_scenario(args)
    noise = args.noise == "on"
    if args.command == "fig2":
        table = run_fig2_sweep(scenario, noise=noise)
    elif args.command == "fig3":
        table = run_fig3_sweep(scenario, noise=noise)
    elif args.command == "sweep":
        if scenario.sweep is None:
            raise ConfigError("scenario has no sweep block", "sweep")
        rows = run_sweep(scenario, scenario.sweep, noise=noise)
        table = SweepTable("sweep", rows, table_metadata(
            "sweep", scenario, noise, {"sweep": scenario.sweep.variable}))
    elif args.command == "calibration":
        table = calibration_table(scenario)
    else:
        return _render_mapping(oracle_check(scenario), args.format)
    return table.to_json() if args.format == "json" else table.to_csv()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WeakAmpError, ValueError, ZeroDivisionError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
