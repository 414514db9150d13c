"""qmclab-figs command line: render one figure from result CSVs.

Exit codes: 0 success, 1 bad arguments or schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, FigureSpec, SchemaError, render


def run_cli(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="qmclab-figs", description=__doc__)
    parser.add_argument("--figure", required=True, choices=FIGURES)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", help="result CSV (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 1
    try:
        spec = FigureSpec(args.figure, tuple(args.inputs), args.out)
        render(spec)
    except SchemaError as exc:
        print(f"qmclab-figs: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def main() -> None:
    raise SystemExit(run_cli())
