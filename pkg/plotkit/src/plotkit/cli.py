"""Command-line interface.

Three subcommands, one per renderer, with flags mirroring the PanelSpec
fields:

    plotkit populations m1.csv m2.csv m3.csv m4.csv \
        --columns p_G_A3,p_E_A2,p_photon_state \
        --magnify p_photon_state=10 --layout 2x2 --out panel.png
    plotkit surfaces surfaces.csv --crossings crossings.csv --out fig.svg
    plotkit summary summary.csv --column peak_p_mol --out peaks.png

Exit codes: 0 success, 1 any anticipated error (bad arguments, missing
columns, empty input, window outside data, unwritable output).
"""

from __future__ import annotations

import argparse
import sys

from .errors import PlotkitError
from .render import plot_populations, plot_summary, plot_surfaces
from .spec import PanelSpec


def _parse_pair(text, flag):
    parts = text.split(",")
    if len(parts) != 2:
        raise PlotkitError(f"{flag} expects two comma-separated numbers, "
                           f"got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise PlotkitError(f"{flag} expects numbers, got {text!r}") from None


def _parse_layout(text):
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise PlotkitError(f"--layout expects ROWSxCOLS (e.g. 2x2), "
                           f"got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_magnify(items):
    factors = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise PlotkitError(f"--magnify expects COLUMN=FACTOR, "
                               f"got {item!r}")
        try:
            factors[name] = float(value)
        except ValueError:
            raise PlotkitError(f"--magnify factor for {name!r} is not a "
                               f"number: {value!r}") from None
    return factors


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render figures from simulator CSV output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pop = sub.add_parser(
        "populations",
        help="multi-panel population dynamics from member CSVs",
    )
    pop.add_argument("csvs", nargs="+", metavar="CSV")
    pop.add_argument("--columns", required=True,
                     help="comma-separated column names drawn in every panel")
    pop.add_argument("--magnify", action="append", metavar="COLUMN=FACTOR",
                     help="scale factor for one column (repeatable); "
                          "factors other than 1 are stated in the legend")
    pop.add_argument("--layout", help="grid as ROWSxCOLS (default: "
                                      "near-square)")
    pop.add_argument("--x-column", default="t_fs")
    pop.add_argument("--xlim", metavar="LO,HI")
    pop.add_argument("--ylim", metavar="LO,HI")
    pop.add_argument("--out", required=True)
    pop.add_argument("--format", choices=("png", "svg"))

    sur = sub.add_parser(
        "surfaces",
        help="three-branch polariton surfaces with optional crossing inset",
    )
    sur.add_argument("csv", metavar="SURFACES_CSV")
    sur.add_argument("--crossings", metavar="CROSSINGS_CSV",
                     help="center the inset on the narrowest reported "
                          "crossing")
    sur.add_argument("--inset", metavar="LO,HI",
                     help="explicit inset window in R (bohr)")
    sur.add_argument("--inset-half-width", type=float, default=0.25,
                     help="half width of the derived inset window "
                          "(default 0.25 bohr)")
    sur.add_argument("--out", required=True)
    sur.add_argument("--format", choices=("png", "svg"))

    summ = sub.add_parser(
        "summary",
        help="one sweep-summary quantity versus the swept parameter",
    )
    summ.add_argument("csv", metavar="SUMMARY_CSV")
    summ.add_argument("--column", default="peak_p_mol")
    summ.add_argument("--x-column",
                      help="default: the parameter column of the sweep")
    summ.add_argument("--out", required=True)
    summ.add_argument("--format", choices=("png", "svg"))

    return parser


def run(args) -> int:
    if args.command == "populations":
        spec = PanelSpec(
            csv_paths=tuple(args.csvs),
            columns=tuple(c for c in args.columns.split(",") if c),
            out_path=args.out,
            magnifications=_parse_magnify(args.magnify),
            x_column=args.x_column,
            xlim=_parse_pair(args.xlim, "--xlim") if args.xlim else None,
            ylim=_parse_pair(args.ylim, "--ylim") if args.ylim else None,
            fmt=args.format,
        )
        layout = _parse_layout(args.layout) if args.layout else None
        report = plot_populations(spec, layout=layout)
    elif args.command == "surfaces":
        window = _parse_pair(args.inset, "--inset") if args.inset else None
        report = plot_surfaces(
            args.csv,
            out_path=args.out,
            inset_window=window,
            crossings_csv=args.crossings,
            inset_half_width=args.inset_half_width,
            fmt=args.format,
        )
    else:
        report = plot_summary(
            args.csv,
            out_path=args.out,
            column=args.column,
            x_column=args.x_column,
            fmt=args.format,
        )
    print(f"wrote {report.out_path} and {report.sidecar_path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (PlotkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
