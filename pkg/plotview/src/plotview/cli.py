"""Command line interface: ``simplot <spec.json>`` or ``simplot --kind ...``."""

from __future__ import annotations

import argparse
import sys

from .csvio import CsvError
from .render import KINDS, PlotSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplot",
        description="Render figures from simcav CSV outputs (no value alteration)",
    )
    parser.add_argument("spec", nargs="?", help="JSON plot spec (kind/in/out/title/...)")
    parser.add_argument("--kind", choices=KINDS, help="plot kind")
    parser.add_argument(
        "--in", dest="inputs", action="append", default=[], metavar="CSV",
        help="input CSV (repeatable)",
    )
    parser.add_argument("--out", help="output image path")
    parser.add_argument("--title")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.spec is not None:
            spec = PlotSpec.from_file(args.spec)
        else:
            if not args.kind or not args.inputs or not args.out:
                print("either a spec file or --kind/--in/--out is required", file=sys.stderr)
                return 2
            spec = PlotSpec(
                kind=args.kind,
                inputs=tuple(args.inputs),
                output=args.out,
                title=args.title,
                xlabel=args.xlabel,
                ylabel=args.ylabel,
            )
        result = render(spec)
    except CsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.path} ({len(result.curves)} curves)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
