"""Exact k-nearest-neighbor graphs over a point pool.

Forward adjacency is stored CSR-style (``indptr``/``indices``/``weights``);
the reverse adjacency is derived from it, so the two are transposes by
construction.  Ties in distance or similarity are broken by ascending id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .data import DataError, Dataset

METRICS = ("euclidean-unit", "jaccard-weighted")

# rows x columns budget for one block of pairwise scores
_BLOCK_ELEMS = 1 << 23


def jaccard_similarity(a: Sequence[int], b: Sequence[int]) -> float:
    """|a & b| / |a | b| for two sorted index lists; 0.0 when both are empty."""
    i = j = inter = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        if a[i] == b[j]:
            inter += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    union = na + nb - inter
    return inter / union if union else 0.0


@dataclass
class NeighborGraph:
    n: int
    k: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    rev_indptr: np.ndarray = field(init=False, repr=False)
    rev_indices: np.ndarray = field(init=False, repr=False)
    rev_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0 or self.indptr[-1] != self.indices.size:
            raise DataError("malformed forward index pointer")
        if self.indices.size != self.weights.size:
            raise DataError("indices and weights differ in length")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise DataError("neighbor id out of range")
        if not (np.isfinite(self.weights).all() and (self.weights >= 0).all()):
            raise DataError("edge weights must be finite and nonnegative")
        self._build_reverse()
        self._padded = None

    def _build_reverse(self):
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        order = np.lexsort((src, self.indices))
        dst = self.indices[order]
        self.rev_indices = src[order]
        self.rev_weights = self.weights[order]
        counts = np.bincount(dst, minlength=self.n)
        self.rev_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    @classmethod
    def from_lists(cls, lists: Sequence[Iterable[tuple[int, float]]], k: int | None = None) -> "NeighborGraph":
        lists = [list(row) for row in lists]
        n = len(lists)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in lists])
        indices = np.array([j for row in lists for j, _ in row], dtype=np.int64)
        weights = np.array([w for row in lists for _, w in row], dtype=np.float64)
        if k is None:
            k = max((len(row) for row in lists), default=0)
        return cls(n, k, indptr, indices, weights)

    @classmethod
    def empty(cls, n: int) -> "NeighborGraph":
        """A graph with no edges: every label is conditionally independent."""
        return cls(n, 0, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))

    def forward(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.indices[s:e], self.weights[s:e]

    def reverse(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Points listing ``i`` as a neighbor, and the weight each gives it."""
        s, e = self.rev_indptr[i], self.rev_indptr[i + 1]
        return self.rev_indices[s:e], self.rev_weights[s:e]

    def reverse_degrees(self) -> np.ndarray:
        return np.diff(self.rev_indptr)

    def reverse_padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Reverse adjacency as ``(n, max_degree)`` arrays padded with -1 / 0.0."""
        if self._padded is None:
            deg = self.reverse_degrees()
            width = int(deg.max()) if self.n else 0
            ids = np.full((self.n, width), -1, dtype=np.int64)
            w = np.zeros((self.n, width))
            rows = np.repeat(np.arange(self.n), deg)
            cols = np.arange(self.rev_indices.size) - np.repeat(self.rev_indptr[:-1], deg)
            ids[rows, cols] = self.rev_indices
            w[rows, cols] = self.rev_weights
            self._padded = (ids, w)
        return self._padded

    def validate(self, exact_k: bool = True) -> None:
        """Raise :class:`DataError` if a structural invariant is violated."""
        deg = np.diff(self.indptr)
        if exact_k and not (deg == min(self.k, self.n - 1)).all():
            raise DataError(f"forward lists must have exactly {min(self.k, self.n - 1)} entries")
        src = np.repeat(np.arange(self.n), deg)
        if (src == self.indices).any():
            raise DataError("self edge in forward list")
        pairs = src * self.n + self.indices
        if np.unique(pairs).size != pairs.size:
            raise DataError("duplicate edge in forward list")
        # transpose check against an independently built sparse matrix
        fwd = sparse.csr_matrix((np.ones(pairs.size), (src, self.indices)), shape=(self.n, self.n))
        rsrc = np.repeat(np.arange(self.n), np.diff(self.rev_indptr))
        rev = sparse.csr_matrix((np.ones(rsrc.size), (rsrc, self.rev_indices)), shape=(self.n, self.n))
        if (fwd.T != rev).nnz:
            raise DataError("reverse adjacency is not the transpose of forward")

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            for i in range(self.n):
                nb, w = self.forward(i)
                fh.write(f"{i}: " + " ".join(f"{j}:{x!r}" for j, x in zip(nb.tolist(), w.tolist())) + "\n")

    @classmethod
    def load(cls, path: str | Path, validate: bool = False) -> "NeighborGraph":
        path = Path(path)
        rows: dict[int, list[tuple[int, float]]] = {}
        try:
            with path.open() as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    head, _, rest = line.partition(":")
                    pid = int(head)
                    if pid in rows:
                        raise DataError(f"{path}:{lineno}: duplicate point {pid}")
                    rows[pid] = [(int(a), float(b)) for a, b in (tok.split(":") for tok in rest.split())]
        except (OSError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"{path}: {exc}") from exc
        n = len(rows)
        if sorted(rows) != list(range(n)):
            raise DataError(f"{path}: point ids must be 0..{n - 1}")
        graph = cls.from_lists([rows[i] for i in range(n)])
        if validate:
            graph.validate(exact_k=False)
        return graph


def _take_k_best(scores: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest scores per row, ties by ascending column."""
    r = scores.shape[0]
    kth = np.partition(scores, k - 1, axis=1)[:, k - 1 : k]
    rows, cols = np.nonzero(scores <= kth)
    vals = scores[rows, cols]
    order = np.lexsort((cols, vals, rows))
    rows, cols = rows[order], cols[order]
    starts = np.searchsorted(rows, np.arange(r))
    rank = np.arange(rows.size) - starts[rows]
    keep = rank < k
    return cols[keep].reshape(r, k)


def _fingerprint_matrix(features: list[np.ndarray]) -> sparse.csr_matrix:
    lengths = np.array([f.size for f in features], dtype=np.int64)
    indptr = np.concatenate(([0], np.cumsum(lengths)))
    indices = np.concatenate(features) if lengths.sum() else np.zeros(0, dtype=np.int64)
    width = int(indices.max()) + 1 if indices.size else 1
    data = np.ones(indices.size, dtype=np.int64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(features), width))


def build_knn_graph(dataset: Dataset, k: int, metric: str = "euclidean-unit") -> NeighborGraph:
    """Exact k-NN by full scan.

    ``euclidean-unit`` (dense features): nearest by Euclidean distance, weight 1.
    ``jaccard-weighted`` (fingerprints): most similar by Jaccard index, weight = similarity.
    """
    n = dataset.n
    if metric not in METRICS:
        raise DataError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if k < 1 or k >= n:
        raise DataError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if metric == "euclidean-unit" and dataset.kind != "dense":
        raise DataError("euclidean-unit needs dense features")
    if metric == "jaccard-weighted" and dataset.kind != "sparse":
        raise DataError("jaccard-weighted needs sparse fingerprints")

    nbrs = np.empty((n, k), dtype=np.int64)
    wts = np.empty((n, k))
    if metric == "euclidean-unit":
        x = dataset.features
        step = max(1, _BLOCK_ELEMS // max(1, n * x.shape[1]))
        for s in range(0, n, step):
            e = min(n, s + step)
            diff = x[s:e, None, :] - x[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            d2[np.arange(e - s), np.arange(s, e)] = np.inf
            nbrs[s:e] = _take_k_best(d2, k)
        wts.fill(1.0)
    else:
        mat = _fingerprint_matrix(dataset.features)
        sizes = np.asarray(mat.sum(axis=1)).ravel()
        mat_t = mat.T.tocsc()
        step = max(1, _BLOCK_ELEMS // n)
        for s in range(0, n, step):
            e = min(n, s + step)
            inter = (mat[s:e] @ mat_t).toarray().astype(np.float64)
            union = sizes[s:e, None] + sizes[None, :] - inter
            sim = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
            score = -sim
            score[np.arange(e - s), np.arange(s, e)] = np.inf
            cols = _take_k_best(score, k)
            nbrs[s:e] = cols
            wts[s:e] = np.take_along_axis(sim, cols, axis=1)
    indptr = np.arange(0, n * k + 1, k, dtype=np.int64)
    return NeighborGraph(n, k, indptr, nbrs.ravel(), wts.ravel())
