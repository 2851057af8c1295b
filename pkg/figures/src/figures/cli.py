"""figures CLI: curves | sweep | bars, reading harness CSV/JSON outputs."""

from __future__ import annotations

import argparse
import sys

from .plots import CurveSpec, FigureInputError, plot_best_bars, plot_curves, plot_sweep


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_out(out: str, fmt: str | None) -> str:
    if fmt is None:
        return out
    stem = out.rsplit(".", 1)[0] if "." in out.rsplit("/", 1)[-1] else out
    return f"{stem}.{fmt}"


def build_parser() -> _Parser:
    parser = _Parser(prog="figures",
                     description="Render charts from treebench metrics CSV and "
                                 "run-record JSON files.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="training/validation accuracy curves")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="metrics CSV path(s)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--runs", help="comma list of run ids to overlay")
    p.add_argument("--title", default="Training and validation accuracy")
    p.add_argument("--format", choices=("png", "svg"), help="override the extension")

    p = sub.add_parser("sweep", help="per-group mean and std error bars")
    p.add_argument("--in", dest="inputs", required=True, help="records JSON path")
    p.add_argument("--out", required=True)
    p.add_argument("--group", default="group",
                   help="record/config key to group by (default: sweep group)")
    p.add_argument("--title")
    p.add_argument("--format", choices=("png", "svg"))

    p = sub.add_parser("bars", help="best accuracy per model")
    p.add_argument("--in", dest="inputs", required=True, help="records JSON path")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="Top accuracy per model")
    p.add_argument("--format", choices=("png", "svg"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        out = _resolve_out(args.out, args.format)
        if args.command == "curves":
            runs = [r for r in (args.runs or "").split(",") if r]
            spec = CurveSpec(csv_paths=list(args.inputs), run_ids=runs,
                             out_path=out, title=args.title)
            path = plot_curves(spec)
        elif args.command == "sweep":
            from .plots import read_records
            records = read_records(args.inputs)
            path = plot_sweep(records, args.group, out, title=args.title)
        else:
            from .plots import read_records
            records = read_records(args.inputs)
            path = plot_best_bars(records, out, title=args.title)
    except (FigureInputError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
