"""Console entry points.

Both commands exit 0 on success and 2 on any malformed input; nothing is
written when the input is rejected.
"""

import argparse
import sys

from .figures import plot_convergence, plot_field
from .reader import PlotError


def main_convergence(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot_convergence",
        description="Render log-log convergence panels from sweep CSV files.",
    )
    parser.add_argument("csvs", nargs="+", help="sweep CSV files, one panel each")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        data = plot_convergence(args.csvs, args.out)
    except (PlotError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({len(data)} panel(s))")
    return 0


def main_field(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot_field",
        description="Render a heatmap from a pointwise field dump.",
    )
    parser.add_argument("dump", help="field CSV (x,y,error)")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        plot_field(args.dump, args.out)
    except (PlotError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0
