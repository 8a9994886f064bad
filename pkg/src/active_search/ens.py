"""Efficient nonmyopic search (ENS).

Score of a candidate x with m = remaining budget - 1 further queries:

    p(x) + E_y[ sum of the m largest probabilities after observing (x, y) ]

The candidate leaves the pool before the top-m sum is taken.

Selection can skip candidates lazily: every candidate gets a cheap upper
bound, candidates are scored exactly in descending bound order, and scoring
stops once the best exact score beats the next bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lookahead import conditioned_top_sums
from .model import KnnModel, SearchState
from .myopic import EmptyPoolError
from .topsum import TopSumIndex

# absolute slack added to bounds so rounding can never prune the true argmax
BOUND_SLACK = 1e-9
BOUNDS = ("ones", "positive")


@dataclass
class EnsEvaluation:
    point_id: int
    score: float
    immediate: float
    future: float
    exact: bool = True


@dataclass
class PruningStats:
    total: int
    evaluated: int

    @property
    def fraction_pruned(self) -> float:
        return 1.0 - self.evaluated / self.total if self.total else 0.0


def _remaining_after(state: SearchState) -> int:
    if state.remaining < 1:
        raise ValueError("no budget left")
    return state.remaining - 1


def ens_score(model: KnnModel, topsum: TopSumIndex | None, state: SearchState, x: int) -> EnsEvaluation:
    """Exact score of one candidate through the top-sum index (reference path)."""
    m = _remaining_after(state)
    p = model.probability(x)
    if m == 0:
        return EnsEvaluation(int(x), p, p, 0.0)
    if topsum is None:
        topsum = TopSumIndex.from_model(model)
    affected = model.affected_set(x)
    removals = [int(x)] + [int(z) for z in affected]
    sums = []
    for y in (0, 1):
        z, upd = model.conditioned_probabilities(x, y)
        sums.append(topsum.top_sum_with_deltas(m, removals, list(zip(z.tolist(), upd.tolist()))))
    future = p * sums[1] + (1 - p) * sums[0]
    return EnsEvaluation(int(x), p + future, p, future)


def ens_upper_bound(model: KnnModel, topsum: TopSumIndex | None, state: SearchState, x: int) -> float:
    """Score bound obtained by pretending every affected probability becomes 1."""
    m = _remaining_after(state)
    p = model.probability(x)
    if m == 0:
        return p
    if topsum is None:
        topsum = TopSumIndex.from_model(model)
    affected = [int(z) for z in model.affected_set(x)]
    return p + topsum.top_sum_with_deltas(m, [int(x)] + affected, [(z, 1.0) for z in affected])


def ens_scores(model: KnnModel, state: SearchState, candidates=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized exact scores: (candidates, immediate, future)."""
    m = _remaining_after(state)
    cands = model.unlabeled() if candidates is None else np.asarray(candidates, dtype=np.int64)
    p = model.probabilities()[cands]
    if m == 0:
        return cands, p, np.zeros(cands.size)
    s0 = conditioned_top_sums(model, cands, 0, m)
    s1 = conditioned_top_sums(model, cands, 1, m)
    return cands, p, s0 + p * (s1 - s0)


def ens_upper_bounds(model: KnnModel, state: SearchState, candidates=None, bound: str = "ones") -> np.ndarray:
    """Vectorized bounds.

    ``ones``: affected probabilities set to 1.
    ``positive``: affected probabilities set to their value after a positive
    observation; valid because a positive label can only raise them.
    """
    m = _remaining_after(state)
    cands = model.unlabeled() if candidates is None else np.asarray(candidates, dtype=np.int64)
    p = model.probabilities()[cands]
    if bound == "ones":
        return p + conditioned_top_sums(model, cands, 1, m, optimistic=True)
    if bound == "positive":
        return p + conditioned_top_sums(model, cands, 1, m)
    raise ValueError(f"unknown bound {bound!r}; expected one of {BOUNDS}")


def _argmax_lowest_id(ids: np.ndarray, scores: np.ndarray) -> int:
    top = scores.max()
    return int(np.flatnonzero(scores == top)[ids[scores == top].argmin()])


def ens_select(
    model: KnnModel,
    state: SearchState,
    pruning: bool = True,
    bound: str = "ones",
) -> tuple[int, EnsEvaluation, PruningStats]:
    cands = model.unlabeled()
    if cands.size == 0:
        raise EmptyPoolError("no unlabeled points")
    m = _remaining_after(state)

    if not pruning:
        _, p, fut = ens_scores(model, state, cands)
        score = p + fut
        i = _argmax_lowest_id(cands, score)
        ev = EnsEvaluation(int(cands[i]), float(score[i]), float(p[i]), float(fut[i]))
        return ev.point_id, ev, PruningStats(cands.size, cands.size)

    p_all = model.probabilities()[cands]
    s1_all = None
    if bound == "positive" and m > 0:
        s1_all = conditioned_top_sums(model, cands, 1, m)
        ub = p_all + s1_all
    else:
        ub = ens_upper_bounds(model, state, cands, bound)
    ub = ub + BOUND_SLACK
    order = np.lexsort((cands, -ub))

    best_score, best_id, best = -np.inf, -1, None
    pos, wave, n = 0, 8, cands.size
    while pos < n:
        idx = order[pos : pos + wave]
        c = cands[idx]
        p = p_all[idx]
        if m == 0:
            fut = np.zeros(c.size)
        else:
            s0 = conditioned_top_sums(model, c, 0, m)
            s1 = s1_all[idx] if s1_all is not None else conditioned_top_sums(model, c, 1, m)
            fut = s0 + p * (s1 - s0)
        score = p + fut
        for j in range(c.size):
            if score[j] > best_score or (score[j] == best_score and c[j] < best_id):
                best_score, best_id = score[j], int(c[j])
                best = EnsEvaluation(int(c[j]), float(score[j]), float(p[j]), float(fut[j]))
        pos += c.size
        if pos < n and ub[order[pos]] < best_score:
            break
        wave = min(2 * wave, 4096)
    return best_id, best, PruningStats(n, pos)
