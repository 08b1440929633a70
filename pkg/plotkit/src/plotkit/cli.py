"""Command-line renderer for sweep CSVs.

Exit codes: 0 on success, 2 for missing/unknown columns or malformed input.
"""

from __future__ import annotations

import argparse
import sys

from .core import ColumnError, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one metric panel from a sweep CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--x", default="value")
    plot.add_argument("--y", default="ari", help="ari|ami|angle_deg|J")
    plot.add_argument("--group", default="method")
    plot.add_argument("--title", default="")
    plot.add_argument("--out", required=True, help=".png or .svg")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    spec = PlotSpec(csv_path=args.csv, x=args.x, y=args.y, group=args.group,
                    out_path=args.out, title=args.title)
    try:
        render(spec)
    except ColumnError as exc:
        print(f"missing column: {exc.args[0]}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
