"""Point pools with hidden labels, plus the on-disk dataset formats.

Two feature kinds are supported:

* ``dense``  -- an ``(n, d)`` float array, one row per point.
* ``sparse`` -- one strictly increasing ``int64`` array of feature indices per
  point (a binary fingerprint).

Dense CSV::

    id,label,f1,f2,...
    0,1,0.25,0.75

Fingerprint file (no header)::

    id,label,3 17 204
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Malformed dataset, graph file, or inconsistent inputs."""


@dataclass
class Dataset:
    features: np.ndarray | list[np.ndarray]
    truth: np.ndarray
    name: str = "dataset"
    ids: list[str] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        truth = np.asarray(self.truth)
        if truth.ndim != 1:
            raise DataError("truth must be one-dimensional")
        if truth.size and not np.isin(truth, (0, 1)).all():
            raise DataError("truth labels must be 0 or 1")
        self.truth = truth.astype(np.int8)
        n = self.truth.size

        if isinstance(self.features, np.ndarray):
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != n:
                raise DataError(f"dense features must have shape ({n}, d), got {feats.shape}")
            if not np.isfinite(feats).all():
                raise DataError("dense features must be finite")
            self.features = feats
        else:
            fps = []
            for i, row in enumerate(self.features):
                row = np.asarray(row, dtype=np.int64)
                if row.ndim != 1:
                    raise DataError(f"fingerprint {i} is not a flat index list")
                if row.size > 1 and not (np.diff(row) > 0).all():
                    raise DataError(f"fingerprint {i} indices are not strictly increasing")
                fps.append(row)
            if len(fps) != n:
                raise DataError(f"{len(fps)} fingerprints for {n} labels")
            self.features = fps

        if self.ids is None:
            self.ids = [str(i) for i in range(n)]
        elif len(self.ids) != n:
            raise DataError("ids and truth lengths differ")

    @property
    def n(self) -> int:
        return int(self.truth.size)

    @property
    def kind(self) -> str:
        return "dense" if isinstance(self.features, np.ndarray) else "sparse"

    @property
    def targets(self) -> np.ndarray:
        return np.flatnonzero(self.truth == 1)


def load_dense_csv(path: str | Path, name: str | None = None) -> Dataset:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or len(header) < 3 or [h.strip() for h in header[:2]] != ["id", "label"]:
                raise DataError(f"{path}: expected header 'id,label,f1,...'")
            ids, labels, rows = [], [], []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
                ids.append(rec[0].strip())
                labels.append(int(rec[1]))
                rows.append([float(v) for v in rec[2:]])
    except (OSError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: {exc}") from exc
    feats = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 2)
    return Dataset(feats, np.array(labels), name=name or path.stem, ids=ids)


def load_fingerprints(path: str | Path, name: str | None = None) -> Dataset:
    path = Path(path)
    ids, labels, fps = [], [], []
    try:
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",", 2)
                if len(parts) != 3:
                    raise DataError(f"{path}:{lineno}: expected 'id,label,i1 i2 ...'")
                ids.append(parts[0].strip())
                labels.append(int(parts[1]))
                fps.append(np.array([int(t) for t in parts[2].split()], dtype=np.int64))
    except (OSError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: {exc}") from exc
    return Dataset(fps, np.array(labels, dtype=np.int8), name=name or path.stem, ids=ids)


def load_dataset(path: str | Path, kind: str | None = None) -> Dataset:
    """Load by explicit ``kind`` or guess from the first line."""
    path = Path(path)
    if kind is None:
        try:
            first = path.open().readline()
        except OSError as exc:
            raise DataError(f"{path}: {exc}") from exc
        kind = "dense" if first.startswith("id,label") else "sparse"
    if kind == "dense":
        return load_dense_csv(path)
    if kind == "sparse":
        return load_fingerprints(path)
    raise DataError(f"unknown dataset kind {kind!r}")


def write_dense_csv(dataset: Dataset, path: str | Path) -> None:
    if dataset.kind != "dense":
        raise DataError("write_dense_csv needs dense features")
    d = dataset.features.shape[1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"] + [f"f{j + 1}" for j in range(d)])
        for pid, y, row in zip(dataset.ids, dataset.truth, dataset.features):
            w.writerow([pid, int(y)] + [repr(float(v)) for v in row])


def write_fingerprints(dataset: Dataset, path: str | Path) -> None:
    if dataset.kind != "sparse":
        raise DataError("write_fingerprints needs sparse features")
    with Path(path).open("w") as fh:
        for pid, y, fp in zip(dataset.ids, dataset.truth, dataset.features):
            fh.write(f"{pid},{int(y)},{' '.join(str(int(i)) for i in fp)}\n")


def subset(dataset: Dataset, index: Sequence[int], name: str | None = None) -> Dataset:
    index = np.asarray(index, dtype=np.int64)
    if dataset.kind == "dense":
        feats = dataset.features[index]
    else:
        feats = [dataset.features[i] for i in index]
    return Dataset(feats, dataset.truth[index], name=name or dataset.name,
                   ids=[dataset.ids[i] for i in index])
