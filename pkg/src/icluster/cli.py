"""Command-line entry points for reproducible clustering runs.

Exit-code contract: 0 on success, 1 when the input or a checker violates a
domain invariant, 2 for usage and I/O problems.  Every subcommand emits
machine-readable JSON (schemas carry ``format_version``), and a fixed
configuration plus seed always produces byte-identical output files.  Set
``ICLUSTER_LOG=DEBUG`` (or any logging level name) for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dendro
from .axioms import SUITES, run_suite
from .chains import chain_costs
from .core import (
    InvalidSpaceError,
    SpaceFormatError,
    as_alpha,
    loads_strict,
    prepared,
    space_from_json,
    space_to_json,
    validate,
)
from .experiments import (
    benchmark_db,
    classification_error,
    exact_network_distance,
    mean_distance_benchmark,
    networks_to_interval_space,
    read_network_csv,
    read_snapshots_csv,
    run_moons_trial,
    snapshots_to_interval_space,
    write_snapshots_csv,
)
from .dendro import cut_k, ultrametric_to_dendrogram
from .methods import (
    UltrametricSpace,
    alpha_separation,
    cluster_and_combine,
    combine_and_cluster,
    single_linkage,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

CLUSTER_METHODS = ("co", "cl", "sl-upper", "sl-lower", "mean-benchmark", "both")

log = logging.getLogger("icluster")


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by the clustering subcommands."""

    subcommand: str
    inputs: tuple[str, ...]
    method: str = "both"
    alpha: float = 0.5
    seed: int = 1
    output_dir: str | None = None
    newick: bool = False
    svg: bool = False

    def __post_init__(self):
        as_alpha(self.alpha)  # raises on out-of-range values
        if self.method not in CLUSTER_METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {CLUSTER_METHODS}")


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(directory: Path, name: str, text: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")
    log.debug("wrote %s", target)
    return target


def _print_json(doc) -> None:
    print(json.dumps(doc))


def _load_space(path: str):
    """Space JSON, or a snapshot CSV reduced to its interval space."""
    text = _read_text(path)
    if path.endswith(".csv"):
        points, labels = read_snapshots_csv(text)
        return snapshots_to_interval_space(points, labels), (points, labels)
    return space_from_json(text), None


def cmd_validate(args) -> int:
    space, _ = _load_space(args.input)
    report = validate(space, strict_positive_lower=not args.non_strict)
    _print_json({
        "format_version": 1,
        "ok": report.ok,
        "violations": [
            {"kind": v.kind, "i": v.i, "j": v.j, "detail": v.detail}
            for v in report.violations
        ],
        "zero_lower_pairs": [list(p) for p in report.zero_lower_pairs],
    })
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_costs(args) -> int:
    space, _ = _load_space(args.input)
    costs = chain_costs(space)
    doc = {
        "format_version": 1,
        "labels": list(space.labels),
        "lower_cost": costs.lower_cost.tolist(),
        "upper_cost": costs.upper_cost.tolist(),
    }
    if args.output_dir:
        _write_text(Path(args.output_dir), "costs.json", json.dumps(doc))
    _print_json(doc)
    return EXIT_OK


def _ultrametric_doc(u: UltrametricSpace, alpha: float) -> str:
    # deliberately method-free: methods that coincide must emit identical bytes
    return json.dumps({
        "format_version": 1,
        "alpha": alpha,
        "labels": list(u.labels),
        "u": u.u.tolist(),
    })


def _emit_method_outputs(outdir: Path, name: str, u: UltrametricSpace,
                         alpha: float, cfg: RunConfig) -> dict:
    # file maps carry names relative to the output dir so that identical
    # configurations produce byte-identical documents
    d = ultrametric_to_dendrogram(u)
    files = {
        "ultrametric": _write_text(outdir, f"ultrametric_{name}.json",
                                   _ultrametric_doc(u, alpha)).name,
        "dendrogram": _write_text(outdir, f"dendrogram_{name}.json", dendro.to_json(d)).name,
    }
    if cfg.newick:
        files["newick"] = _write_text(outdir, f"dendrogram_{name}.nwk", dendro.to_newick(d)).name
    if cfg.svg:
        files["svg"] = _write_text(outdir, f"dendrogram_{name}.svg", dendro.to_svg(d)).name
    return files


def cmd_cluster(args) -> int:
    cfg = RunConfig("cluster", (args.input,), args.method, args.alpha,
                    output_dir=args.output_dir, newick=args.newick, svg=args.svg)
    space, snapshots = _load_space(args.input)
    outdir = Path(cfg.output_dir or ".")
    alpha = as_alpha(cfg.alpha)

    runs: dict[str, UltrametricSpace] = {}
    if cfg.method in ("co", "both"):
        runs["co"] = combine_and_cluster(space, alpha)
    if cfg.method in ("cl", "both"):
        runs["cl"] = cluster_and_combine(space, alpha)
    if cfg.method == "sl-upper":
        sp = prepared(space)
        runs["sl-upper"] = single_linkage(sp.labels, sp.upper)
    if cfg.method == "sl-lower":
        sp = prepared(space)
        runs["sl-lower"] = single_linkage(sp.labels, sp.lower)
    if cfg.method == "mean-benchmark":
        if snapshots is None:
            print("error: mean-benchmark needs a snapshot CSV input", file=sys.stderr)
            return EXIT_USAGE
        points, labels = snapshots
        runs["mean-benchmark"] = mean_distance_benchmark(points, labels)

    summary = {"format_version": 1, "method": cfg.method, "alpha": alpha, "files": {}}
    if space.n >= 2:
        summary["alpha_separation"] = alpha_separation(space, alpha)
    for name, u in runs.items():
        summary["files"][name] = _emit_method_outputs(outdir, name, u, alpha, cfg)
    if cfg.method == "both":
        gap = runs["co"].u - runs["cl"].u
        off = ~np.eye(space.n, dtype=bool)
        if space.n >= 2:
            summary["gap"] = {
                "min": float(gap[off].min()),
                "mean": float(gap[off].mean()),
                "max": float(gap[off].max()),
            }
    _print_json(summary)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = RunConfig("synth", (), "both", args.alpha, args.seed,
                    output_dir=args.output_dir, newick=args.newick, svg=args.svg)
    trial = run_moons_trial(args.n, args.T, args.sigma2, as_alpha(cfg.alpha), cfg.seed)
    outdir = Path(cfg.output_dir or ".")
    alpha = as_alpha(cfg.alpha)

    files = {"snapshots": _write_text(outdir, "snapshots.csv",
                                      write_snapshots_csv(trial.walk)).name,
             "space": _write_text(outdir, "space.json", space_to_json(trial.space)).name}
    for name, u in (("co", trial.co), ("cl", trial.cl), ("benchmark", trial.benchmark)):
        files[name] = _emit_method_outputs(outdir, name, u, alpha, cfg)

    gap = trial.co.u - trial.cl.u
    off = ~np.eye(trial.space.n, dtype=bool)
    metrics = {
        "format_version": 1,
        "params": {"n": args.n, "T": args.T, "sigma2": args.sigma2,
                   "alpha": alpha, "seed": cfg.seed},
        "alpha_separation": alpha_separation(trial.space, alpha),
        "gap": {"min": float(gap[off].min()), "mean": float(gap[off].mean()),
                "max": float(gap[off].max())},
        "mean_bound_width": trial.mean_bound_width,
        "classification_error": trial.errors,
        "files": files,
    }
    _write_text(outdir, "metrics.json", json.dumps(metrics))
    _print_json(metrics)
    return EXIT_OK


def cmd_netcluster(args) -> int:
    cfg = RunConfig("netcluster", tuple(args.input), "both", args.alpha,
                    output_dir=args.output_dir, newick=args.newick, svg=args.svg)
    if len(args.input) < 2:
        print("error: need at least two network CSV files", file=sys.stderr)
        return EXIT_USAGE
    nets = []
    names = []
    for path in args.input:
        nets.append(read_network_csv(_read_text(path)))
        names.append(Path(path).stem)
    if len(set(names)) != len(names):
        names = [f"{name}#{i}" for i, name in enumerate(names)]

    external = None
    if args.lower_kind == "external":
        if not args.external_lower:
            print("error: --lower-kind external requires --external-lower", file=sys.stderr)
            return EXIT_USAGE
        doc = loads_strict(_read_text(args.external_lower))
        external = doc["dist"] if isinstance(doc, dict) else doc

    space = networks_to_interval_space(nets, args.lower_kind, external, names)
    outdir = Path(cfg.output_dir or ".")
    alpha = as_alpha(cfg.alpha)

    files = {"space": _write_text(outdir, "space.json", space_to_json(space)).name}
    runs = {"co": combine_and_cluster(space, alpha), "cl": cluster_and_combine(space, alpha)}
    db = np.zeros((len(nets), len(nets)))
    for i in range(len(nets)):
        for j in range(i + 1, len(nets)):
            db[i, j] = db[j, i] = benchmark_db(nets[i], nets[j])
    db_clamped = db.copy()
    off = ~np.eye(len(nets), dtype=bool)
    db_clamped[off & (db_clamped == 0.0)] = 1e-12
    runs["db"] = single_linkage(names, db_clamped)
    for name, u in runs.items():
        files[name] = _emit_method_outputs(outdir, name, u, alpha, cfg)

    metrics = {
        "format_version": 1,
        "params": {"alpha": alpha, "lower_kind": args.lower_kind,
                   "networks": list(names)},
        "zero_offdiagonal_networks": [names[i] for i, n in enumerate(nets)
                                      if n.has_zero_offdiagonal],
        "files": files,
    }
    if args.classes:
        truth = loads_strict(_read_text(args.classes))
        if not isinstance(truth, dict):
            print("error: classes file must map network name to class", file=sys.stderr)
            return EXIT_USAGE
        missing = [n for n in names if n not in truth]
        if missing:
            print(f"error: classes file misses networks {missing}", file=sys.stderr)
            return EXIT_USAGE
        metrics["classification_error"] = {
            name: classification_error(
                cut_k(ultrametric_to_dendrogram(u), 2), {n: truth[n] for n in names}
            )
            for name, u in runs.items()
        }
    if args.exact_oracle:
        oracle = []
        for i in range(len(nets)):
            for j in range(i + 1, len(nets)):
                entry = {"pair": [names[i], names[j]],
                         "lower": float(space.lower[i, j]),
                         "upper": float(space.upper[i, j])}
                if nets[i].n <= 4 and nets[j].n <= 4:
                    exact = exact_network_distance(nets[i], nets[j])
                    entry["exact"] = exact
                    entry["sandwich_ok"] = bool(
                        space.lower[i, j] <= exact + 1e-12
                        and exact <= space.upper[i, j] + 1e-12
                    )
                else:
                    entry["exact"] = None
                    entry["skipped"] = "networks larger than 4 nodes"
                oracle.append(entry)
        metrics["exact_oracle"] = oracle
        if any(e.get("sandwich_ok") is False for e in oracle):
            _write_text(outdir, "metrics.json", json.dumps(metrics))
            _print_json(metrics)
            return EXIT_DOMAIN
    _write_text(outdir, "metrics.json", json.dumps(metrics))
    _print_json(metrics)
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        report = run_suite(args.suite, args.instances, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_json(report)
    return EXIT_OK if report["passed"] else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icluster",
        description="Hierarchical clustering of metric spaces with interval-valued distances.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="validate a space file and report violations")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--non-strict", action="store_true",
                   help="accept zero lower bounds (they are clamped before clustering)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("costs", help="emit the minimax chain-cost matrices")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output-dir", "-o")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_costs)

    p = sub.add_parser("cluster", help="cluster one space file")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--method", choices=CLUSTER_METHODS, default="both")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--output-dir", "-o")
    p.add_argument("--newick", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="run the moving-points experiment end to end")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--sigma2", type=float, default=0.4)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output-dir", "-o", required=True)
    p.add_argument("--newick", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("netcluster", help="cluster a set of networks via distance bounds")
    p.add_argument("--input", "-i", nargs="+", required=True,
                   help="network CSV files (square matrix with label header row/column)")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lower-kind", choices=("diameter", "external"), default="diameter")
    p.add_argument("--external-lower", help="matrix JSON with precomputed lower bounds")
    p.add_argument("--classes", help="JSON file mapping network name to class label")
    p.add_argument("--exact-oracle", action="store_true",
                   help="verify lower <= exact <= upper on pairs of <=4-node networks")
    p.add_argument("--output-dir", "-o", required=True)
    p.add_argument("--newick", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_netcluster)

    p = sub.add_parser("check", help="run a randomized verification suite")
    p.add_argument("--suite", default="all", help=f"one of {('all',) + SUITES}")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=20240405)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("ICLUSTER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, SpaceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidSpaceError, dendro.DendrogramError, dendro.UltrametricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
