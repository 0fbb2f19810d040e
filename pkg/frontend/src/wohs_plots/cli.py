"""Command line front end: one panel per invocation."""
from __future__ import annotations

import argparse
import sys

from wohs_plots.io import MalformedInputError
from wohs_plots.render import Panel, PlotJob, render

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _parse_start(raw: str) -> tuple:
    parts = raw.split(",")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        vals = ()
    if len(vals) != 2:
        raise MalformedInputError(
            f"--start needs two comma-separated numbers, got {raw!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wohs-plots",
        description="Render wohs histogram CSV exports as image files.")
    parser.add_argument("--panel", required=True,
                        choices=[p.value for p in Panel])
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="CSV",
                        help="histogram CSV; marginal-steps accepts several")
    parser.add_argument("--out", required=True, metavar="IMAGE",
                        help="output image path, format from the extension")
    parser.add_argument("--label", action="append", default=[],
                        help="legend label, once per input")
    parser.add_argument("--start", metavar="X,Y",
                        help="start point marked on the joint panel; "
                             "use --start=-2,0 for negative coordinates")
    parser.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = PlotJob(
            inputs=tuple(args.inputs),
            panel=Panel(args.panel),
            out=args.out,
            labels=tuple(args.label),
            start=_parse_start(args.start) if args.start else None,
            title=args.title,
        )
    except (ValueError, MalformedInputError) as exc:
        print(f"wohs-plots: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        render(job)
    except (MalformedInputError, OSError) as exc:
        print(f"wohs-plots: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
