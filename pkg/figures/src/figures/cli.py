"""Command-line entry point: render figure CSVs into image files."""

from __future__ import annotations

import argparse
import sys

from .csvdialect import DialectError
from .rendering import FigureDataError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advreg-figures",
        description="Render data-series CSVs into publication-style plots.",
    )
    sub = parser.add_subparsers(dest="command")
    ren = sub.add_parser("render", help="render one figure from its CSV directory")
    ren.add_argument("figure_id", help="figure identifier, e.g. fig2")
    ren.add_argument("in_dir", help="directory holding the figure's CSVs (or its parent)")
    ren.add_argument("out_path", help="output image path; extension picks the format")
    ren.add_argument("--png", action="store_true",
                     help="write raster PNG instead of the default vector format")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command != "render":
        parser.print_usage(sys.stderr)
        return 1
    try:
        report = render(args.figure_id, args.in_dir, args.out_path, png=args.png)
    except (FigureDataError, DialectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{report.figure_id}: wrote {report.out_path} "
          f"({report.series_count} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
