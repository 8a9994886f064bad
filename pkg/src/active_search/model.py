"""k-NN posterior model with incremental conditioning and LIFO rollback.

For an unlabeled point x with observed forward neighbors j,

    Pr(y=1 | x, D) = (gamma * prior + sum_j w_j y_j) / (gamma + sum_j w_j)

Two accumulators per point (``sum_w`` and ``sum_w_pos``) make conditioning
on a new observation O(reverse degree).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .graph import NeighborGraph


class ModelError(ValueError):
    """Contract violation on the probability model (labeled point, bad rollback...)."""


class Checkpoint(NamedTuple):
    serial: int
    depth: int


class Ranking(NamedTuple):
    """Unlabeled points sorted by (probability desc, id asc)."""

    ids: np.ndarray
    values: np.ndarray
    rank: np.ndarray  # rank[id], -1 for labeled points


class KnnModel:
    def __init__(self, graph: NeighborGraph, gamma: float = 1.0, prior: float | np.ndarray = 0.05):
        if not gamma > 0:
            raise ModelError("gamma must be positive")
        prior_arr = np.broadcast_to(np.asarray(prior, dtype=np.float64), (graph.n,)).copy()
        if ((prior_arr < 0) | (prior_arr > 1)).any():
            raise ModelError("prior must lie in [0, 1]")
        self.graph = graph
        self.n = graph.n
        self.gamma = float(gamma)
        self.prior = prior_arr
        self._base = self.gamma * prior_arr
        self.sum_w = np.zeros(self.n)
        self.sum_w_pos = np.zeros(self.n)
        self.labels = np.full(self.n, -1, dtype=np.int8)
        self._log: list[tuple[int, int, np.ndarray, np.ndarray, np.ndarray]] = []
        self._serial = 0
        self.version = 0
        self._cache: dict[str, object] = {}

    # -- queries -----------------------------------------------------------

    def is_labeled(self, x: int) -> bool:
        return bool(self.labels[x] >= 0)

    @property
    def observed(self) -> dict[int, int]:
        idx = np.flatnonzero(self.labels >= 0)
        return {int(i): int(self.labels[i]) for i in idx}

    def probability(self, x: int) -> float:
        if self.labels[x] >= 0:
            raise ModelError(f"point {x} is already labeled")
        return float((self._base[x] + self.sum_w_pos[x]) / (self.gamma + self.sum_w[x]))

    def probabilities(self) -> np.ndarray:
        """Posterior probability for every point (labeled entries are meaningless)."""
        p = self._cache.get("p")
        if p is None:
            p = (self._base + self.sum_w_pos) / (self.gamma + self.sum_w)
            p.flags.writeable = False
            self._cache["p"] = p
        return p

    def unlabeled_mask(self) -> np.ndarray:
        m = self._cache.get("mask")
        if m is None:
            m = self.labels < 0
            m.flags.writeable = False
            self._cache["mask"] = m
        return m

    def unlabeled(self) -> np.ndarray:
        u = self._cache.get("unl")
        if u is None:
            u = np.flatnonzero(self.labels < 0)
            self._cache["unl"] = u
        return u

    def ranking(self) -> Ranking:
        r = self._cache.get("rank")
        if r is None:
            unl = self.unlabeled()
            p = self.probabilities()
            ids = unl[np.lexsort((unl, -p[unl]))]
            rank = np.full(self.n, -1, dtype=np.int64)
            rank[ids] = np.arange(ids.size)
            r = Ranking(ids, p[ids], rank)
            self._cache["rank"] = r
        return r

    def affected_set(self, x: int) -> np.ndarray:
        """Unlabeled points whose probability moves when ``x`` is observed."""
        z, _ = self.graph.reverse(x)
        return z[self.labels[z] < 0]

    def conditioned_probabilities(self, x: int, y: int) -> tuple[np.ndarray, np.ndarray]:
        """Probabilities the affected set of ``x`` would take after observing (x, y)."""
        z, w = self.graph.reverse(x)
        keep = self.labels[z] < 0
        z, w = z[keep], w[keep]
        num = self._base[z] + (self.sum_w_pos[z] + w * float(y))
        return z, num / (self.gamma + (self.sum_w[z] + w))

    # -- mutation ------------------------------------------------------------

    def condition(self, x: int, y: int) -> Checkpoint:
        """Observe (x, y) hypothetically; undo with :meth:`rollback`."""
        if self.labels[x] >= 0:
            raise ModelError(f"point {x} is already labeled")
        if y not in (0, 1):
            raise ModelError(f"label must be 0 or 1, got {y!r}")
        z, w = self.graph.reverse(x)
        self._serial += 1
        token = Checkpoint(self._serial, len(self._log))
        self._log.append((self._serial, int(x), z, self.sum_w[z].copy(), self.sum_w_pos[z].copy()))
        self.sum_w[z] += w
        if y:
            self.sum_w_pos[z] += w
        self.labels[x] = y
        self._touch()
        return token

    def rollback(self, token: Checkpoint) -> None:
        if not self._log or self._log[-1][0] != token.serial or token.depth != len(self._log) - 1:
            raise ModelError("rollback out of LIFO order or with a stale checkpoint")
        _, x, z, old_w, old_pos = self._log.pop()
        self.sum_w[z] = old_w
        self.sum_w_pos[z] = old_pos
        self.labels[x] = -1
        self._touch()

    def observe(self, x: int, y: int) -> None:
        """Permanently add a real observation."""
        if self._log:
            raise ModelError("cannot commit a real observation while checkpoints are outstanding")
        self.condition(x, y)
        self._log.pop()

    @property
    def depth(self) -> int:
        return len(self._log)

    def _touch(self):
        self.version += 1
        self._cache.clear()

    def copy(self) -> "KnnModel":
        """Independent replica sharing the (read-only) graph."""
        other = copy.copy(self)
        other.sum_w = self.sum_w.copy()
        other.sum_w_pos = self.sum_w_pos.copy()
        other.labels = self.labels.copy()
        other._log = list(self._log)
        other._cache = {}
        return other

    def state_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sum_w.copy(), self.sum_w_pos.copy(), self.labels.copy()


@dataclass
class SearchState:
    """Budget bookkeeping.  ``spent`` counts queries, not the initial training seed."""

    budget: int
    batch_size: int = 1
    spent: int = 0
    batches: list[list[tuple[int, int]]] = field(default_factory=list)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if not 0 <= self.spent <= self.budget:
            raise ValueError("spent must lie in [0, budget]")

    @property
    def remaining(self) -> int:
        return self.budget - self.spent

    @property
    def next_batch_size(self) -> int:
        return min(self.batch_size, self.remaining)

    def after(self, queries: int) -> "SearchState":
        """A hypothetical state ``queries`` further along (history not copied)."""
        return SearchState(self.budget, self.batch_size, self.spent + queries)

    def record(self, batch: list[tuple[int, int]]) -> None:
        if len(batch) > self.remaining:
            raise ValueError("batch exceeds remaining budget")
        self.batches.append(list(batch))
        self.spent += len(batch)
