"""Brute-force ground truth for tiny instances.

Everything here enumerates the full search tree, so it is guarded to small
pools and budgets.  Joint label probabilities follow the ascending-id chain
rule used throughout the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import KnnModel, SearchState

MAX_POOL = 12
MAX_REMAINING = 6
MAX_BATCH = 3


class IntractableError(ValueError):
    pass


@dataclass
class OptimalValue:
    expected_utility: float
    best_action: tuple[int, ...]
    node_count: int = 0


def _labelings(model: KnnModel, xs: Sequence[int]):
    """Yield (probability, labels) for every labeling of ``xs``, leaving the model
    conditioned on it during the yield."""
    xs = sorted(xs)

    def rec(i: int, prob: float, labels: tuple):
        if i == len(xs):
            yield prob, labels
            return
        x = xs[i]
        px = model.probability(x)
        for y, py in ((0, 1.0 - px), (1, px)):
            if py == 0.0:
                continue
            t = model.condition(x, y)
            try:
                yield from rec(i + 1, prob * py, labels + ((x, y),))
            finally:
                model.rollback(t)

    yield from rec(0, 1.0, ())


class _Solver:
    def __init__(self, model: KnnModel, b: int):
        self.model = model
        self.b = b
        self.memo: dict = {}
        self.nodes = 0

    def key(self, r: int):
        return (r, self.model.labels.tobytes())

    def value(self, r: int) -> tuple[float, tuple[int, ...]]:
        """Optimal expected utility of the remaining r queries from the current state."""
        if r <= 0:
            return 0.0, ()
        k = self.key(r)
        hit = self.memo.get(k)
        if hit is not None:
            return hit
        self.nodes += 1
        size = min(self.b, r)
        ranking = self.model.ranking()
        if r <= self.b:
            # one batch left: take the most probable points
            ids = tuple(int(i) for i in ranking.ids[:size])
            out = (float(ranking.values[:size].sum()), tuple(sorted(ids)))
        else:
            best, best_x = -np.inf, ()
            for xs in itertools.combinations(sorted(ranking.ids.tolist()), size):
                q = self.q_value(xs, r)
                if q > best:
                    best, best_x = q, xs
            out = (best, best_x)
        self.memo[k] = out
        return out

    def q_value(self, xs: Sequence[int], r: int) -> float:
        p = self.model.probabilities()
        total = float(sum(p[x] for x in xs))
        for prob, _ in _labelings(self.model, xs):
            total += prob * self.value(r - len(xs))[0]
        return total


def _guard(model: KnnModel, state: SearchState, b: int) -> None:
    if model.unlabeled().size > MAX_POOL or state.remaining > MAX_REMAINING or b > MAX_BATCH:
        raise IntractableError(
            f"exact recursion limited to pool <= {MAX_POOL}, remaining <= {MAX_REMAINING}, b <= {MAX_BATCH}"
        )


def optimal_expected_utility(model: KnnModel, state: SearchState, b: int = 1) -> OptimalValue:
    _guard(model, state, b)
    solver = _Solver(model, b)
    v, x = solver.value(state.remaining)
    return OptimalValue(v, x, solver.nodes)


def action_value(model: KnnModel, state: SearchState, batch: Sequence[int], b: int = 1) -> float:
    """Expected utility of querying ``batch`` now and acting optimally afterwards."""
    _guard(model, state, b)
    if len(batch) > state.remaining:
        raise ValueError("batch exceeds remaining budget")
    return _Solver(model, b).q_value(sorted(int(x) for x in batch), state.remaining)


def policy_expected_utility(
    model: KnnModel,
    state: SearchState,
    policy: Callable[[KnnModel, SearchState], Sequence[int]],
) -> float:
    """Exact expected utility of a deterministic policy, by enumerating every
    label outcome.  The policy must return at most ``state.next_batch_size``
    points and leave the model unchanged."""
    if state.remaining <= 0:
        return 0.0
    xs = [int(x) for x in policy(model, state)]
    if not 1 <= len(xs) <= state.next_batch_size or len(set(xs)) != len(xs):
        raise ValueError(f"policy returned an invalid batch {xs}")
    p = model.probabilities()
    total = float(sum(p[x] for x in xs))
    nxt = state.after(len(xs))
    for prob, _ in _labelings(model, xs):
        total += prob * policy_expected_utility(model, nxt, policy)
    return total


def p_at_least_one(model: KnnModel, batch: Sequence[int]) -> float:
    """1 - Pr(all labels in the batch are 0), chain rule in ascending id order."""
    prob_zero, tokens = 1.0, []
    try:
        for x in sorted(int(v) for v in batch):
            prob_zero *= 1.0 - model.probability(x)
            tokens.append(model.condition(x, 0))
    finally:
        for t in reversed(tokens):
            model.rollback(t)
    return 1.0 - prob_zero


def optimal_p_at_least_one(model: KnnModel, b: int) -> tuple[tuple[int, ...], float]:
    pool = model.unlabeled().tolist()
    if len(pool) > 15 or b > 4:
        raise IntractableError("exhaustive search limited to pool <= 15, b <= 4")
    best, best_val = (), -1.0
    for combo in itertools.combinations(pool, b):
        v = p_at_least_one(model, combo)
        if v > best_val:
            best, best_val = combo, v
    return best, best_val
