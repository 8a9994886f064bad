"""Command line entry point: ``active-search <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path


from ..data import DataError, load_dataset
from ..graph import build_knn_graph
from .experiment import (
    ConfigError,
    ExperimentConfig,
    GENERATED,
    _Source,
    run_experiment,
    terminal_counts,
    write_outputs,
)
from .stats import paired_t_test
from .tables import adaptivity_ratio_table, budget_waypoint_table, format_waypoint_table

EXIT_CONFIG = 2
EXIT_DATA = 3


def _progress(quiet: bool):
    if quiet:
        return None
    return lambda rep: print(f"  replication {rep} done", file=sys.stderr)


def _datasets_for(config: ExperimentConfig) -> dict:
    source = _Source(config)
    return {r: source.get(r)[0] for r in range(config.replications)}


def cmd_knn_build(args) -> int:
    ds = load_dataset(args.dataset, args.format)
    graph = build_knn_graph(ds, args.k, args.metric)
    graph.save(args.out)
    print(f"wrote {graph.n} x {graph.k} neighbor lists to {args.out}")
    return 0


def _run_and_write(config: ExperimentConfig, outdir: Path, args) -> dict:
    records = run_experiment(config, workers=args.workers, progress=_progress(args.quiet))
    datasets = _datasets_for(config) if config.dataset in GENERATED else None
    summary = write_outputs(config, records, outdir, datasets)
    print(f"{config.name or config.policy}: mean targets {summary['mean_targets']:.2f} "
          f"over {summary['replications']} replications")
    return summary


def cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    config.validate()
    _run_and_write(config, Path(args.out or config.output or "results"), args)
    return 0


def cmd_toy(args) -> int:
    outdir = Path(args.out)
    summaries = {}
    for policy in args.policy:
        cfg = ExperimentConfig(policy=policy, budget=args.budget, dataset="toy", k=args.k, gamma=args.gamma,
                               prior=args.prior, replications=args.reps, seed=args.seed,
                               initial="closest-to-center", points=args.points,
                               name=f"toy_{policy.replace(':', '_')}")
        cfg.validate()
        summaries[policy] = _run_and_write(cfg, outdir, args)
    (outdir / "toy.summary.json").write_text(json.dumps(summaries, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_gap(args) -> int:
    config = ExperimentConfig.load(args.config)
    sizes = config.extra.get("batch_sizes", [1, 5, 10, 25, 50])
    policies = config.extra.get("policies", [config.policy])
    outdir = Path(args.out or config.output or "results")
    runs: dict = {}
    for policy in policies:
        runs[policy] = {}
        for b in sizes:
            # sequential policies stand in for themselves at b = 1 only
            cfg = replace(config, policy=policy, batch_size=int(b), name=f"gap_{policy.replace(':', '_')}_b{b}",
                          extra={})
            cfg.validate()
            records = run_experiment(cfg, workers=args.workers, progress=_progress(args.quiet))
            write_outputs(cfg, records, outdir)
            runs[policy][int(b)] = records
    table = adaptivity_ratio_table(runs)
    with (outdir / "adaptivity_ratio.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["batch_size", "ratio"])
        for b, ratio in table:
            w.writerow([b, repr(ratio)])
            print(f"b={b:>4d}  ratio={ratio:.4f}")
    return 0


def _column_values(path: str, column: str) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or column not in rows[0]:
        raise DataError(f"{path}: no column {column!r}")
    if "replication" in rows[0] and "query" in rows[0]:
        # record files: terminal value per replication
        out = {}
        for row in rows:
            out[int(row["replication"])] = float(row[column])
        return out
    return {i: float(row[column]) for i, row in enumerate(rows)}


def cmd_ttest(args) -> int:
    a = _column_values(args.csv_a, args.column)
    b = _column_values(args.csv_b, args.column)
    keys = sorted(set(a) & set(b))
    if len(keys) != len(a) or len(keys) != len(b):
        raise DataError("the two files do not pair up")
    res = paired_t_test([a[k] for k in keys], [b[k] for k in keys])
    print(json.dumps({
        "pairs": res.pair_count, "mean_difference": res.mean_difference, "t": res.t_statistic, "df": res.df,
        "p_two_sided": res.p_two_sided, "p_greater": res.p_greater, "p_less": res.p_less,
        "ci95": list(res.ci95),
    }, indent=2))
    return 0


def cmd_waypoints(args) -> int:
    config = ExperimentConfig.load(args.config)
    waypoints = [int(w) for w in args.at.split(",")]
    policies = config.extra.get("policies", ["one-step", "two-step"])
    ens_budgets = config.extra.get("ens_budgets", waypoints)
    outdir = Path(args.out or config.output or "results")
    runs = {}
    top = max(waypoints)
    for policy in policies:
        cfg = replace(config, policy=policy, budget=top, name=f"wp_{policy.replace(':', '_')}", extra={})
        cfg.validate()
        runs[policy] = run_experiment(cfg, workers=args.workers, progress=_progress(args.quiet))
        write_outputs(cfg, runs[policy], outdir)
    for tau in sorted(ens_budgets, reverse=True):
        cfg = replace(config, policy="ens", budget=int(tau), name=f"wp_ens-{tau}", extra={})
        cfg.validate()
        runs[f"ENS-{tau}"] = run_experiment(cfg, workers=args.workers, progress=_progress(args.quiet))
        write_outputs(cfg, runs[f"ENS-{tau}"], outdir)
    table = budget_waypoint_table(runs, waypoints)
    text = format_waypoint_table(table, waypoints)
    (outdir / "waypoints.txt").write_text(text + "\n")
    (outdir / "waypoints.json").write_text(json.dumps(
        {k: {str(w): v for w, v in row.items()} for k, row in table.items()}, indent=2) + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="active-search", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--workers", type=int, default=1, help="parallel replications")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("knn-build", help="precompute a k-NN graph file")
    p.add_argument("dataset")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--metric", default="euclidean-unit", choices=["euclidean-unit", "jaccard-weighted"])
    p.add_argument("--format", choices=["dense", "sparse"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_knn_build)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("toy", help="unit-square toy problem")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--policy", action="append", required=True, help="repeatable")
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--prior", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/toy")
    common(p)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("gap", help="adaptivity ratio across batch sizes")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("ttest", help="paired t-test between two result CSVs")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("--column", default="cumulative")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("waypoints", help="targets found at budget waypoints, with ENS-tau variants")
    p.add_argument("--config", required=True)
    p.add_argument("--at", required=True, help="comma separated, e.g. 100,300,500")
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_waypoints)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
