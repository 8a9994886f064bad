"""Seeded policy runs over a dataset, and their on-disk outputs."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..data import DataError, Dataset, load_dataset
from ..graph import METRICS, NeighborGraph, build_knn_graph
from ..model import KnnModel, SearchState
from ..myopic import parse_policy
from ..policy import select
from .rng import stream
from .synthetic import generate_clustered_instance
from .toy import generate_toy_instance

INITIAL_RULES = ("closest-to-center", "random-target")
GENERATED = {"toy": (generate_toy_instance, 500), "synthetic": (generate_clustered_instance, 2000)}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    policy: str
    budget: int
    dataset: str = "toy"
    dataset_format: str | None = None
    graph: str | None = None
    metric: str = "euclidean-unit"
    k: int = 50
    gamma: float = 1.0
    prior: float = 0.05
    batch_size: int = 1
    replications: int = 1
    seed: int = 0
    initial: str = "random-target"
    points: int | None = None
    pruning: bool = True
    bound: str = "ones"
    output: str | None = None
    name: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        try:
            spec = parse_policy(self.policy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.budget >= self.batch_size >= 1:
            raise ConfigError("need budget >= batch_size >= 1")
        if self.replications < 1:
            raise ConfigError("need at least one replication")
        if spec.sequential_only and self.batch_size > 1:
            raise ConfigError(f"policy {self.policy!r} is sequential but batch_size={self.batch_size}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.initial not in INITIAL_RULES:
            raise ConfigError(f"unknown initial rule {self.initial!r}")
        if self.dataset in GENERATED and self.metric != "euclidean-unit":
            raise ConfigError(f"the {self.dataset} dataset is dense; use euclidean-unit")
        if self.points is not None and self.dataset not in GENERATED:
            raise ConfigError("points only applies to generated datasets")
        if self.gamma <= 0 or not 0 <= self.prior <= 1:
            raise ConfigError("need gamma > 0 and prior in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = {k: v for k, v in d.items() if k not in known}
        try:
            cfg = cls(**{k: v for k, v in d.items() if k in known})
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.extra.update(extra)
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d


@dataclass
class ExperimentRecord:
    replication: int
    query: int
    batch: int
    point: int
    probability: float
    label: int
    cumulative: int
    pruned_fraction: float | None = None
    wall_time: float = 0.0


RECORD_COLUMNS = ["replication", "query", "batch", "point", "probability", "label", "cumulative", "pruned_fraction"]


def initial_seed(dataset: Dataset, rule: str, rng: np.random.Generator) -> int:
    if rule == "closest-to-center":
        if dataset.kind != "dense":
            raise ConfigError("closest-to-center needs dense features")
        x = dataset.features
        center = np.asarray(dataset.meta.get("center", (x.min(axis=0) + x.max(axis=0)) / 2))
        return int(np.argmin(np.linalg.norm(x - center, axis=1)))
    targets = dataset.targets
    if targets.size == 0:
        raise DataError("dataset has no targets to seed from")
    return int(targets[rng.integers(targets.size)])


class _Source:
    """Dataset and graph shared by all replications of a file-backed run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.dataset = None
        self.graph = None
        if config.dataset not in GENERATED:
            self.dataset = load_dataset(config.dataset, config.dataset_format)
            if config.graph:
                self.graph = NeighborGraph.load(config.graph)
                if self.graph.n != self.dataset.n:
                    raise DataError("graph and dataset sizes differ")
            else:
                self.graph = build_knn_graph(self.dataset, config.k, config.metric)

    def get(self, rep: int) -> tuple[Dataset, NeighborGraph]:
        if self.dataset is not None:
            return self.dataset, self.graph
        cfg = self.config
        make, default_n = GENERATED[cfg.dataset]
        ds = make(stream(cfg.seed, rep, "instance"), cfg.points or default_n)
        return ds, build_knn_graph(ds, cfg.k, cfg.metric)


def run_replication(config: ExperimentConfig, rep: int, dataset: Dataset, graph: NeighborGraph) -> list[ExperimentRecord]:
    spec = parse_policy(config.policy)
    model = KnnModel(graph, config.gamma, config.prior)
    seed_point = initial_seed(dataset, config.initial, stream(config.seed, rep, "initial"))
    model.observe(seed_point, int(dataset.truth[seed_point]))
    if dataset.n - 1 < config.budget:
        raise DataError(f"budget {config.budget} exceeds the {dataset.n - 1} unlabeled points")
    state = SearchState(config.budget, config.batch_size)
    rng = stream(config.seed, rep, "policy")
    records: list[ExperimentRecord] = []
    found = 0
    batch_no = 0
    while state.remaining > 0:
        batch_no += 1
        t0 = time.perf_counter()
        ids, info = select(spec, model, state, rng, pruning=config.pruning, bound=config.bound)
        p = model.probabilities()
        probs = [float(p[x]) for x in ids]
        pairs = []
        for x in ids:
            y = int(dataset.truth[x])
            model.observe(x, y)
            pairs.append((x, y))
        state.record(pairs)
        elapsed = time.perf_counter() - t0
        for (x, y), px in zip(pairs, probs):
            found += y
            records.append(ExperimentRecord(
                rep, len(records) + 1, batch_no, int(x), px, y, found,
                info.get("pruned_fraction"), elapsed / len(pairs)))
    return records


def _run_one(args) -> list[ExperimentRecord]:
    config, rep, shared = args
    dataset, graph = _Source(config).get(rep) if shared is None else shared
    return run_replication(config, rep, dataset, graph)


def run_experiment(config: ExperimentConfig, workers: int = 1, progress=None) -> list[ExperimentRecord]:
    """All replications of ``config``; the result does not depend on ``workers``."""
    config.validate()
    source = _Source(config)
    reps = range(config.replications)
    out: list[ExperimentRecord] = []
    if workers > 1:
        shared = None if config.dataset in GENERATED else (source.dataset, source.graph)
        with ProcessPoolExecutor(workers) as pool:
            for recs in pool.map(_run_one, [(config, r, shared) for r in reps]):
                out.extend(recs)
                if progress:
                    progress(recs[0].replication if recs else -1)
        return out
    for r in reps:
        dataset, graph = source.get(r)
        out.extend(run_replication(config, r, dataset, graph))
        if progress:
            progress(r)
    return out


def terminal_counts(records: list[ExperimentRecord]) -> dict[int, int]:
    """Final cumulative target count per replication."""
    out: dict[int, int] = {}
    for r in records:
        out[r.replication] = r.cumulative
    return out


def cumulative_at(records: list[ExperimentRecord], query: int) -> dict[int, int]:
    out: dict[int, int] = {}
    for r in records:
        if r.query == query:
            out[r.replication] = r.cumulative
    return out


def write_records(records: list[ExperimentRecord], path: str | Path) -> None:
    """Deterministic CSV (no timing column)."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([r.replication, r.query, r.batch, r.point, repr(r.probability), r.label, r.cumulative,
                        "" if r.pruned_fraction is None else repr(r.pruned_fraction)])


def write_timings(records: list[ExperimentRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "query", "wall_time"])
        for r in records:
            w.writerow([r.replication, r.query, f"{r.wall_time:.6f}"])


def read_records(path: str | Path) -> list[ExperimentRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            pf = row.get("pruned_fraction", "")
            out.append(ExperimentRecord(
                int(row["replication"]), int(row["query"]), int(row["batch"]), int(row["point"]),
                float(row["probability"]), int(row["label"]), int(row["cumulative"]),
                float(pf) if pf else None))
    return out


def mean_trace(records: list[ExperimentRecord], column: str = "cumulative") -> np.ndarray:
    """Per-query mean of a record column across replications."""
    reps = sorted({r.replication for r in records})
    T = max(r.query for r in records)
    arr = np.zeros((len(reps), T))
    pos = {rep: i for i, rep in enumerate(reps)}
    for r in records:
        arr[pos[r.replication], r.query - 1] = getattr(r, column)
    return arr.mean(axis=0)


def summarize(config: ExperimentConfig, records: list[ExperimentRecord]) -> dict:
    term = np.array(list(terminal_counts(records).values()), dtype=float)
    pruned = [r.pruned_fraction for r in records if r.pruned_fraction is not None]
    return {
        "config": config.to_dict(),
        "replications": int(term.size),
        "mean_targets": float(term.mean()) if term.size else 0.0,
        "std_targets": float(term.std(ddof=1)) if term.size > 1 else 0.0,
        "mean_pruned_fraction": float(np.mean(pruned)) if pruned else None,
        "total_wall_time": float(sum(r.wall_time for r in records)),
    }


def write_outputs(config: ExperimentConfig, records: list[ExperimentRecord], outdir: str | Path,
                  datasets: dict[int, Dataset] | None = None) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = config.name or config.policy.replace(":", "_")
    write_records(records, outdir / f"{stem}.records.csv")
    write_timings(records, outdir / f"{stem}.timings.csv")
    summary = summarize(config, records)
    (outdir / f"{stem}.summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    with (outdir / f"{stem}.trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query", "mean_cumulative", "mean_probability"])
        for q, (c, p) in enumerate(zip(mean_trace(records), mean_trace(records, "probability")), start=1):
            w.writerow([q, repr(float(c)), repr(float(p))])
    if datasets:
        with (outdir / f"{stem}.coords.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replication", "query", "point", "x1", "x2"])
            for r in records:
                ds = datasets.get(r.replication)
                if ds is not None and ds.kind == "dense" and ds.features.shape[1] >= 2:
                    x1, x2 = ds.features[r.point, :2]
                    w.writerow([r.replication, r.query, r.point, repr(float(x1)), repr(float(x2))])
    return summary


def stratified_baseline(dataset: Dataset, graph: NeighborGraph, budget: int, rng: np.random.Generator,
                        fraction: float = 0.05, gamma: float = 1.0, prior: float = 0.05) -> tuple[list[int], int]:
    """Label a prevalence-preserving random sample, then query the ``budget``
    most probable remaining points.  Returns (queried ids, targets found)."""
    size = int(round(fraction * dataset.n))
    pos, neg = dataset.targets, np.flatnonzero(dataset.truth == 0)
    n_pos = int(round(size * pos.size / dataset.n))
    n_neg = size - n_pos
    if n_pos > pos.size or n_neg > neg.size:
        raise DataError("sample larger than a class")
    sample = np.concatenate([rng.choice(pos, n_pos, replace=False), rng.choice(neg, n_neg, replace=False)])
    model = KnnModel(graph, gamma, prior)
    for x in np.sort(sample):
        model.observe(int(x), int(dataset.truth[x]))
    chosen = [int(i) for i in model.ranking().ids[:budget]]
    return chosen, int(dataset.truth[chosen].sum())
