"""``opk-fig``: render one figure from simulator CSV output.

Usage::

    opk-fig <kind> --in <csv> [--summary <json>] --out <png|svg>

Exit codes: 0 rendered; 2 bad invocation (unknown kind, unreadable paths,
unsupported output format); 3 unusable input data (schema mismatch or
version, empty table, missing columns).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureJob, render
from .tables import TableError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opk-fig",
        description="Render figures from opkin CSV tables and summary.json.")
    parser.add_argument("kind", choices=sorted(FIGURE_KINDS),
                        help="figure kind")
    parser.add_argument("--in", dest="table", required=True, metavar="CSV",
                        help="input CSV table")
    parser.add_argument("--summary", metavar="JSON", default=None,
                        help="summary.json with the analytic overlay values")
    parser.add_argument("--out", required=True, metavar="IMG",
                        help="output image (.png or .svg)")
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help; pass both through
        return int(exc.code or 0)
    for label, path in (("input", args.table), ("summary", args.summary)):
        if path is not None and not Path(path).is_file():
            print(f"opk-fig: error: {label} file not found: {path}",
                  file=sys.stderr)
            return EXIT_CONFIG
    job = FigureJob(kind=args.kind, table_path=args.table,
                    summary_path=args.summary, out_path=args.out,
                    dpi=args.dpi)
    try:
        out = render(job)
    except ValueError as exc:
        print(f"opk-fig: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TableError as exc:
        print(f"opk-fig: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
