"""render-report: figures and an HTML index from a simulator run directory.

    render-report <run-dir> [--figures name,name,...] [--format png|svg]
                  [--out DIR]

Exit codes: 0 rendered (warnings allowed), 1 usage error, 2 the directory
cannot satisfy the request (missing inputs or columns).
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

from .formats import FormatError
from .report import JOBS, ReportError, ReportSpec, render_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2


def _parse_figures(text):
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty figure list")
    return tuple(names)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="render-report",
        description="Render figures and an HTML index from a run directory.",
    )
    parser.add_argument("run_dir", help="run or sweep directory to read")
    parser.add_argument(
        "--figures", type=_parse_figures, default=None,
        help=f"comma-separated subset of: {', '.join(sorted(JOBS))}",
    )
    parser.add_argument("--format", choices=("png", "svg"), default="png",
                        help="image format (default png)")
    parser.add_argument("--out", default=None,
                        help="output directory (default: sibling <run-dir>.report)")
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        spec = ReportSpec(
            input_dir=args.run_dir,
            figures=args.figures,
            image_format=args.format,
            out_dir=args.out,
        )
        result = render_report(spec)
    except (ReportError, FormatError) as exc:
        print(f"render-report: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"{len(result.written)} figure(s) -> {result.index}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
