"""Command-line front end.

Commands:
    run              simulate one scheme, or the whole comparison matrix
    sweep-theta      child runs over a regularization grid, shared seed
    prop1-suite      randomized check of the three averaging inequalities
    dump-instance    write a random peer-selection instance to a text file
    selector-oracle  compare the ascent optimizer against brute force

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .config import load_config, parse_override
from .engine import (
    SCHEMES,
    ConfigError,
    mean_final_accuracy,
    median_selected,
    run_experiment,
    total_energy,
    write_manifest,
    write_metrics_csv,
)
from .gain import prop1_check
from .selector import SelectorConfig, brute_force_select, dump_instance, load_instance, optimize, random_instance

log = logging.getLogger(__name__)

PROP1_DIMS = (2, 10, 50, 1000)


class UsageError(ValueError):
    """Bad flags or flag values; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for
    # runtime failures, so remap to 1
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunSpec:
    command: str
    config_path: str | None = None
    overrides: dict[str, object] = field(default_factory=dict)
    output_dir: str = "runs"
    schemes: tuple[str, ...] = SCHEMES
    grid: tuple[float, ...] = ()
    instance_path: str | None = None
    num_neighbors: int = 30
    triples: int = 100_000
    theta: float = 0.0
    seed: int = 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="TOML config file")
    p.add_argument("--scheme", choices=SCHEMES, help="restrict to one scheme")
    p.add_argument("--theta", type=float, help="regularization strength")
    p.add_argument("--alpha", type=float, help="Dirichlet concentration")
    p.add_argument("--rounds", type=int, help="number of rounds")
    p.add_argument("--seed", type=int, help="experiment seed")
    p.add_argument("--out", default="runs", metavar="DIR", help="output directory")
    p.add_argument("--dataset", choices=("synthetic", "idx"), help="data source")
    p.add_argument("--idx-images", metavar="FILE", help="IDX image file")
    p.add_argument("--idx-labels", metavar="FILE", help="IDX label file")
    p.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="generic config override, repeatable",
    )


def _collect_overrides(args: argparse.Namespace) -> dict[str, object]:
    flag_map = {
        "scheme": "experiment.scheme",
        "theta": "experiment.theta",
        "alpha": "experiment.alpha",
        "rounds": "experiment.rounds",
        "seed": "experiment.seed",
        "dataset": "data.source",
        "idx_images": "data.idx_images",
        "idx_labels": "data.idx_labels",
    }
    overrides: dict[str, object] = {}
    for attr, dotted in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = value
    for item in args.set:
        dotted, value = parse_override(item)
        overrides[dotted] = value
    return overrides


def parse_and_validate(argv: list[str]) -> RunSpec:
    parser = _Parser(prog="dflsim", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"dflsim {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scheme or the full comparison")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep-theta", help="child runs over a theta grid")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--grid", default="0,0.005,0.01,0.02,0.05,0.1",
        help="comma-separated theta values",
    )

    p_prop = sub.add_parser("prop1-suite", help="randomized averaging-inequality check")
    p_prop.add_argument("--triples", type=int, default=100_000)
    p_prop.add_argument("--seed", type=int, default=0)

    p_dump = sub.add_parser("dump-instance", help="write a random selection instance")
    p_dump.add_argument("--out", required=True, metavar="FILE")
    p_dump.add_argument("--num-neighbors", type=int, default=30)
    p_dump.add_argument("--seed", type=int, default=0)

    p_oracle = sub.add_parser("selector-oracle", help="optimizer vs subset enumeration")
    p_oracle.add_argument("instance", metavar="FILE", help="instance dump to replay")
    p_oracle.add_argument("--theta", type=float, default=0.0)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )

    spec = RunSpec(command=args.command)
    if args.command in ("run", "sweep-theta"):
        spec.config_path = args.config
        spec.output_dir = args.out
        spec.overrides = _collect_overrides(args)
        if args.scheme is not None:
            spec.schemes = (args.scheme,)
    if args.command == "sweep-theta":
        try:
            grid = tuple(float(v) for v in args.grid.split(",") if v.strip() != "")
        except ValueError:
            raise UsageError(f"--grid must be comma-separated numbers, got {args.grid!r}")
        if not grid:
            raise UsageError("--grid is empty")
        if any(g < 0 for g in grid):
            raise UsageError("--grid values must be >= 0")
        spec.grid = grid
        spec.schemes = ("ocdfl",)
    if args.command == "prop1-suite":
        if args.triples < 1:
            raise UsageError(f"--triples must be >= 1, got {args.triples}")
        spec.triples = args.triples
        spec.seed = args.seed
    if args.command == "dump-instance":
        if args.num_neighbors < 1:
            raise UsageError(f"--num-neighbors must be >= 1, got {args.num_neighbors}")
        spec.output_dir = args.out
        spec.num_neighbors = args.num_neighbors
        spec.seed = args.seed
    if args.command == "selector-oracle":
        spec.instance_path = args.instance
        if args.theta < 0:
            raise UsageError(f"--theta must be >= 0, got {args.theta}")
        spec.theta = args.theta
    return spec


def _cmd_run(spec: RunSpec) -> int:
    base = load_config(spec.config_path, spec.overrides)
    os.makedirs(spec.output_dir, exist_ok=True)
    write_manifest(
        os.path.join(spec.output_dir, "manifest.json"), base, "run",
        extra={"schemes": list(spec.schemes)},
    )
    for scheme in spec.schemes:
        result = run_experiment(replace(base, scheme=scheme))
        path = os.path.join(spec.output_dir, f"metrics_{scheme}.csv")
        write_metrics_csv(result, path)
        print(
            f"{scheme}: final mean accuracy {mean_final_accuracy(result):.4f}, "
            f"total energy {total_energy(result):.6g} J -> {path}"
        )
    return 0


def _cmd_sweep_theta(spec: RunSpec) -> int:
    base = load_config(spec.config_path, spec.overrides)
    os.makedirs(spec.output_dir, exist_ok=True)
    write_manifest(
        os.path.join(spec.output_dir, "manifest.json"), base, "sweep-theta",
        extra={"grid": list(spec.grid)},
    )
    rows = []
    for theta in spec.grid:
        sub_dir = os.path.join(spec.output_dir, f"theta_{theta:g}")
        os.makedirs(sub_dir, exist_ok=True)
        result = run_experiment(replace(base, scheme="ocdfl", theta=theta))
        write_metrics_csv(result, os.path.join(sub_dir, "metrics_ocdfl.csv"))
        rows.append((theta, median_selected(result)))
        print(f"theta={theta:g}: median selected {rows[-1][1]:g}")
    summary = os.path.join(spec.output_dir, "summary.csv")
    with open(summary, "w", newline="") as f:
        f.write("theta,median_selected\n")
        for theta, med in rows:
            f.write(f"{float(theta)!r},{float(med)!r}\n")
    print(f"summary -> {summary}")
    return 0


def run_prop1_suite(triples: int, seed: int, dims=PROP1_DIMS) -> int:
    """Random precondition-satisfying triples; returns the violation count."""
    rng = np.random.default_rng(seed)
    per_dim = [triples // len(dims)] * len(dims)
    per_dim[-1] += triples - sum(per_dim)
    violations = 0
    for dim, count in zip(dims, per_dim):
        for _ in range(count):
            w_star = rng.standard_normal(dim)
            a = w_star + rng.standard_normal(dim) * rng.uniform(0.1, 10.0)
            b = w_star + rng.standard_normal(dim) * rng.uniform(0.1, 10.0)
            if np.linalg.norm(w_star - a) <= np.linalg.norm(w_star - b):
                checks = prop1_check(w_star, a, b)
            else:
                checks = prop1_check(w_star, b, a)
            if not all(checks):
                violations += 1
    return violations


def _cmd_prop1(spec: RunSpec) -> int:
    violations = run_prop1_suite(spec.triples, spec.seed)
    print(f"{violations} violations / {spec.triples} triples "
          f"(dims {', '.join(str(d) for d in PROP1_DIMS)})")
    return 0 if violations == 0 else 2


def _cmd_dump_instance(spec: RunSpec) -> int:
    inst = random_instance(spec.num_neighbors, np.random.default_rng(spec.seed))
    dump_instance(inst, spec.output_dir)
    print(f"wrote {spec.num_neighbors}-neighbor instance -> {spec.output_dir}")
    return 0


def _cmd_selector_oracle(spec: RunSpec) -> int:
    inst = load_instance(spec.instance_path)
    decision = optimize(inst, SelectorConfig(theta=spec.theta))
    oracle, oracle_value = brute_force_select(inst)
    print(f"optimizer ({len(decision.selected)} peers): {sorted(decision.selected)}")
    print(f"brute force ({len(oracle)} peers, value {oracle_value:.6g}): {sorted(oracle)}")
    if set(decision.selected) == set(oracle):
        print("MATCH")
        return 0
    print("MISMATCH")
    return 2


def execute(spec: RunSpec) -> int:
    handler = {
        "run": _cmd_run,
        "sweep-theta": _cmd_sweep_theta,
        "prop1-suite": _cmd_prop1,
        "dump-instance": _cmd_dump_instance,
        "selector-oracle": _cmd_selector_oracle,
    }[spec.command]
    return handler(spec)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_and_validate(argv)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return execute(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        log.debug("unhandled failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
