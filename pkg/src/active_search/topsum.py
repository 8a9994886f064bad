"""Order-statistic index over unlabeled probabilities.

Entries are kept in a treap ordered by ``(-probability, id)`` so that an
in-order walk visits the largest probabilities first.  Every node carries its
subtree size and subtree probability sum, giving O(log n) prefix sums.

``top_sum_with_deltas`` answers "sum of the m largest values after removing
some entries and inserting others" without touching the tree.  It uses the
fact that the top-m sum of a union is ``max_j top_j(I) + top_{m-j}(S)`` and
that the increments in ``j`` are non-increasing, so ``j`` is binary searched.
"""

from __future__ import annotations

import random
from typing import Iterable, Sequence

import numpy as np

REBUILD_EVERY = 10_000


class _Node:
    __slots__ = ("key", "value", "prio", "left", "right", "size", "total")

    def __init__(self, key, value, prio):
        self.key = key
        self.value = value
        self.prio = prio
        self.left = None
        self.right = None
        self.size = 1
        self.total = value


def _pull(t: _Node) -> _Node:
    size, total = 1, t.value
    if t.left is not None:
        size += t.left.size
        total += t.left.total
    if t.right is not None:
        size += t.right.size
        total += t.right.total
    t.size, t.total = size, total
    return t


def _split(t, key):
    """Split into (< key, >= key)."""
    if t is None:
        return None, None
    if t.key < key:
        a, b = _split(t.right, key)
        t.right = a
        return _pull(t), b
    a, b = _split(t.left, key)
    t.left = b
    return a, _pull(t)


def _merge(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a.prio > b.prio:
        a.right = _merge(a.right, b)
        return _pull(a)
    b.left = _merge(a, b.left)
    return _pull(b)


def _size(t) -> int:
    return 0 if t is None else t.size


class TopSumIndex:
    def __init__(self, seed: int = 0):
        self._root = None
        self._value: dict[int, float] = {}
        self._rng = random.Random(seed)
        self._mutations = 0

    @classmethod
    def build(cls, entries: Iterable[tuple[int, float]], seed: int = 0) -> "TopSumIndex":
        index = cls(seed)
        items = []
        for pid, p in entries:
            pid = int(pid)
            if pid in index._value:
                raise ValueError(f"duplicate id {pid}")
            index._value[pid] = float(p)
            items.append(pid)
        index._rebuild()
        return index

    @classmethod
    def from_model(cls, model, seed: int = 0) -> "TopSumIndex":
        p = model.probabilities()
        return cls.build(((int(i), float(p[i])) for i in model.unlabeled()), seed)

    def _key(self, pid: int):
        return (-self._value[pid], pid)

    def _rebuild(self) -> None:
        # Cartesian-tree construction from sorted keys, O(n) after the sort.
        keys = sorted((-v, pid) for pid, v in self._value.items())
        stack: list[_Node] = []
        for key in keys:
            node = _Node(key, -key[0], self._rng.random())
            last = None
            while stack and stack[-1].prio < node.prio:
                last = _pull(stack.pop())
            node.left = last
            if stack:
                stack[-1].right = node
            stack.append(node)
        while len(stack) > 1:
            _pull(stack.pop())
        self._root = _pull(stack[0]) if stack else None
        # interior nodes may have been pulled before their right child was final
        self._repull(self._root)
        self._mutations = 0

    def _repull(self, t):
        if t is None:
            return
        # iterative post-order to avoid recursion limits on degenerate shapes
        order, stack = [], [t]
        while stack:
            node = stack.pop()
            order.append(node)
            if node.left is not None:
                stack.append(node.left)
            if node.right is not None:
                stack.append(node.right)
        for node in reversed(order):
            _pull(node)

    def _bump(self):
        self._mutations += 1
        if self._mutations >= REBUILD_EVERY:
            self._rebuild()

    # -- mutation ------------------------------------------------------------

    def insert(self, pid: int, p: float) -> None:
        pid = int(pid)
        if pid in self._value:
            raise ValueError(f"duplicate id {pid}")
        self._value[pid] = float(p)
        node = _Node(self._key(pid), float(p), self._rng.random())
        a, b = _split(self._root, node.key)
        self._root = _merge(_merge(a, node), b)
        self._bump()

    def remove(self, pid: int) -> None:
        pid = int(pid)
        if pid not in self._value:
            raise KeyError(pid)
        key = self._key(pid)
        a, b = _split(self._root, key)
        _, c = _split(b, (key[0], key[1] + 1))
        self._root = _merge(a, c)
        del self._value[pid]
        self._bump()

    def update(self, pid: int, p: float) -> None:
        self.remove(pid)
        self.insert(pid, p)

    def sync(self, model) -> None:
        """Bring the index in line with ``model``'s unlabeled pool."""
        p = model.probabilities()
        live = set(int(i) for i in model.unlabeled())
        for pid in [q for q in self._value if q not in live]:
            self.remove(pid)
        for pid in live:
            v = float(p[pid])
            old = self._value.get(pid)
            if old is None:
                self.insert(pid, v)
            elif old != v:
                self.update(pid, v)

    # -- queries -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._value)

    def __contains__(self, pid) -> bool:
        return int(pid) in self._value

    def value(self, pid: int) -> float:
        return self._value[int(pid)]

    def items(self) -> list[tuple[int, float]]:
        """Entries in (probability desc, id asc) order."""
        return [(pid, -negp) for negp, pid in sorted((-v, k) for k, v in self._value.items())]

    def top_sum(self, m: int) -> float:
        """Sum of the m largest probabilities (all of them if m >= len)."""
        if m <= 0:
            return 0.0
        total, t = 0.0, self._root
        while t is not None and m > 0:
            ls = _size(t.left)
            if m <= ls:
                t = t.left
                continue
            total += (t.left.total if t.left is not None else 0.0) + t.value
            m -= ls + 1
            t = t.right
        return total

    def rank(self, pid: int) -> int:
        """Number of entries ordered strictly before ``pid``."""
        key = self._key(pid)
        r, t = 0, self._root
        while t is not None:
            if t.key < key:
                r += _size(t.left) + 1
                t = t.right
            elif t.key == key:
                return r + _size(t.left)
            else:
                t = t.left
        raise KeyError(pid)

    def kth(self, i: int) -> tuple[int, float]:
        """Entry at 0-based position ``i`` in descending order."""
        if not 0 <= i < len(self):
            raise IndexError(i)
        t = self._root
        while True:
            ls = _size(t.left)
            if i < ls:
                t = t.left
            elif i == ls:
                return t.key[1], t.value
            else:
                i -= ls + 1
                t = t.right

    def max_excluding(self, excluded: Iterable[int] = ()) -> tuple[int, float]:
        excluded = set(int(e) for e in excluded)
        for i in range(len(self)):
            pid, v = self.kth(i)
            if pid not in excluded:
                return pid, v
        raise ValueError("every entry is excluded")

    def top_sum_with_deltas(
        self,
        m: int,
        removals: Iterable[int] = (),
        insertions: Sequence[tuple[int, float]] = (),
    ) -> float:
        """Top-m sum of ``(entries - removals) + insertions``; the index is not modified."""
        if m < 0:
            raise ValueError("m must be nonnegative")
        removed = sorted(set(int(r) for r in removals))
        for pid in removed:
            if pid not in self._value:
                raise KeyError(f"removal of absent id {pid}")
        for pid, _ in insertions:
            if int(pid) in self._value and int(pid) not in removed:
                raise ValueError(f"insertion id {pid} is still present")
        if m == 0:
            return 0.0

        removed_at = sorted((self.rank(pid), self._value[pid]) for pid in removed)
        n_surv = len(self) - len(removed_at)
        ins = np.sort(np.array([float(v) for _, v in insertions]))[::-1]
        ins_cum = np.concatenate(([0.0], np.cumsum(ins)))

        def survivor_pos(q: int) -> tuple[int, float]:
            # base position covering the first q survivors, and the removed mass inside it
            p, gone = q, 0.0
            for r, v in removed_at:
                if r < p:
                    p += 1
                    gone += v
                else:
                    break
            return p, gone

        def survivor_sum(q: int) -> float:
            if q <= 0:
                return 0.0
            p, gone = survivor_pos(q)
            return self.top_sum(p) - gone

        def survivor_value(q: int) -> float:
            # value of the q-th (1-based) survivor
            p, _ = survivor_pos(q)
            return self.kth(p - 1)[1]

        lo = max(0, m - n_surv)
        hi = min(len(ins), m)
        if lo > hi:
            return float(ins_cum[-1]) + survivor_sum(n_surv)
        # largest j in [lo, hi] such that taking the j-th insertion beats the survivor it displaces
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if ins[mid - 1] >= survivor_value(m - mid + 1):
                lo = mid
            else:
                hi = mid - 1
        return float(ins_cum[lo]) + survivor_sum(m - lo)
