"""Standalone figure tool: CSV inputs, output path, figure kind."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotJob, SchemaError, plot_fer, plot_lambda


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shaping-plots",
        description="Render sweep CSVs as semilog FER curves or re-encoding histograms.",
    )
    parser.add_argument("inputs", nargs="+", help="input CSV files")
    parser.add_argument("--kind", choices=("fer", "lambda"), required=True)
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    parser.add_argument(
        "--label", action="append", default=[], metavar="KEY=TEXT",
        help="curve label override: decoder/encoder_list for fer, snr for lambda",
    )
    args = parser.parse_args(argv)

    labels = {}
    for item in args.label:
        key, _, text = item.partition("=")
        if not text:
            print(f"error: bad label mapping {item!r}", file=sys.stderr)
            return 2
        labels[key] = text

    job = PlotJob(inputs=args.inputs, output=args.out, kind=args.kind, labels=labels)
    try:
        (plot_fer if args.kind == "fer" else plot_lambda)(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
