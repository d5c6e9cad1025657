"""Command line interface: ``simcav run|validate|scenarios``."""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig
from .errors import ConfigError, SimcavError
from .scenarios import describe_scenarios, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simcav",
        description="Atom-in-a-cavity-mode wavepacket simulator and verification runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute the scenario described by a config file")
    run_p.add_argument("config", help="path to a flat JSON configuration")
    val_p = sub.add_parser("validate", help="parse and validate a config file")
    val_p.add_argument("config", help="path to a flat JSON configuration")
    sub.add_parser("scenarios", help="list scenarios with one-line descriptions")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "scenarios":
        print(describe_scenarios())
        return 0
    try:
        config = RunConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"ok: scenario '{config.scenario}'")
        return 0
    try:
        return run(config)
    except SimcavError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
