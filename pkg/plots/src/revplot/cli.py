"""Command line: one figure per invocation.

    plot <kind> --in <files> --out <image> [--no-timestamp]

Exit 0 with the output path on stdout; exit 1 with a one-line message
on stderr when an input is malformed or inputs mix configurations.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import __version__
from .errors import PlotError
from .figures import KINDS, FigureSpec, render


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from revspec CSV/JSON outputs.")
    ap.add_argument("--version", action="version",
                    version=f"revspec-plots {__version__}")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    metavar="FILE",
                    help="input files, in the order the kind documents")
    ap.add_argument("--out", required=True, metavar="IMAGE",
                    help="output image path (.svg or .png)")
    ap.add_argument("--no-timestamp", action="store_true",
                    help="omit the embedded date for "
                         "byte-reproducible output")
    ap.add_argument("--window", type=float, nargs=4,
                    metavar=("RE_LO", "RE_HI", "IM_LO", "IM_HI"),
                    help="override the window rectangle "
                         "(spectrum-overlay)")
    ap.add_argument("--title", default=None)
    ap.add_argument("--dpi", type=int, default=150)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = FigureSpec.build(args.kind, args.inputs, args.out,
                                window=args.window, title=args.title,
                                timestamp=not args.no_timestamp,
                                dpi=args.dpi)
        result = render(spec)
    except PlotError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
