"""Command-line entry point: render <figure-kind> --in <dir> --out <file>.

Figure kinds: histogram-grid, moments-vs-lambda, collapse. ``--in`` may be
repeated to overlay or stack multiple input directories. Exit codes:
0 success, 2 schema/usage error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import figures

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_IO = 4

RENDERERS = {
    "histogram-grid": figures.render_histogram_grid,
    "moments-vs-lambda": figures.render_moments_vs_lambda,
    "collapse": figures.render_collapse,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render spinnet CSV outputs into figures")
    parser.add_argument("figure_kind", choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="DIR", help="input directory (repeatable)")
    parser.add_argument("--out", required=True, metavar="FILE",
                        help="output image path (.png, .pdf, .svg, ...)")
    parser.add_argument("--point", type=int, default=0,
                        help="field-grid index for histogram-grid inputs "
                             "with per-point histogram files (default 0)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    renderer = RENDERERS[args.figure_kind]
    kwargs = {}
    if args.figure_kind == "histogram-grid":
        kwargs["point"] = args.point
    try:
        renderer(args.inputs, args.out, **kwargs)
    except figures.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
