"""Command line: render every applicable figure from a run directory.

    dflplots --run-dir runs/demo --out figures/

Picks up metrics_<scheme>.csv files (accuracy, loss, gain, energy) and a
summary.csv (theta sweep) if present. Exit codes: 0 success, 1 bad
inputs, 2 unexpected failure.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def discover(run_dir: str) -> dict[str, list[str]]:
    """Map figure kinds to the input CSVs available in the run directory."""
    metrics = sorted(glob.glob(os.path.join(run_dir, "metrics_*.csv")))
    summary = os.path.join(run_dir, "summary.csv")
    inputs: dict[str, list[str]] = {}
    if metrics:
        for kind in ("acc", "loss", "gain", "energy"):
            inputs[kind] = metrics
    if os.path.exists(summary):
        inputs["theta-sweep"] = [summary]
    return inputs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dflplots", description=__doc__)
    parser.add_argument("--run-dir", required=True, help="directory with metrics CSVs")
    parser.add_argument("--out", default="figures", help="output directory for images")
    parser.add_argument(
        "--kind", choices=FIGURE_KINDS, action="append",
        help="render only these kinds (repeatable; default: everything found)",
    )
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)

    if not os.path.isdir(args.run_dir):
        print(f"error: {args.run_dir} is not a directory", file=sys.stderr)
        return 1
    inputs = discover(args.run_dir)
    kinds = args.kind or list(inputs)
    missing = [k for k in kinds if k not in inputs]
    if missing:
        print(f"error: no input CSVs in {args.run_dir} for: {', '.join(missing)}",
              file=sys.stderr)
        return 1
    if not kinds:
        print(f"error: nothing to render in {args.run_dir}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    try:
        for kind in kinds:
            spec = FigureSpec(
                csv_paths=inputs[kind],
                kind=kind,
                out_path=os.path.join(args.out, f"{kind.replace('-', '_')}.png"),
            )
            render(spec)
            print(f"{kind}: {spec.out_path} (+ {spec.sidecar_path})")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
