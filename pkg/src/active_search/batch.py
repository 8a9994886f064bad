"""Batch policies: sequential simulation and batch-ENS.

The k-NN model only defines conditionals, so the joint label distribution of
a batch is fixed by conditioning in ascending point-id order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ens import ens_select
from .lookahead import conditioned_top_sums
from .model import KnnModel, SearchState
from .myopic import (
    EmptyPoolError,
    ORACLE_CODES,
    one_step_select,
    two_step_select,
)

ORACLE_KINDS = tuple(ORACLE_CODES.values())
MAX_EXACT_BATCH = 12


@dataclass
class FictionalOracle:
    kind: str
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"unknown oracle {self.kind!r}")
        if self.kind == "sampling" and self.rng is None:
            raise ValueError("the sampling oracle needs a random generator")


def fictional_label(oracle: FictionalOracle, model: KnnModel, x: int) -> int:
    if oracle.kind == "always-0":
        return 0
    if oracle.kind == "always-1":
        return 1
    p = model.probability(x)
    if oracle.kind == "most-likely":
        return int(p > 0.5)
    return int(oracle.rng.random() < p)


def _inner_select(inner: str, model: KnnModel, state: SearchState) -> int:
    if inner == "one-step":
        return one_step_select(model, state)
    if inner == "two-step":
        return two_step_select(model, state)
    if inner == "ens":
        return ens_select(model, state)[0]
    raise ValueError(f"inner policy must be one-step, two-step or ens, not {inner!r}")


def sequential_simulation_batch(
    model: KnnModel,
    state: SearchState,
    inner: str,
    oracle: FictionalOracle,
    b: int,
) -> list[int]:
    """Pick b points one at a time, feeding fictional labels back into the model."""
    if model.unlabeled().size < b:
        raise EmptyPoolError(f"need {b} unlabeled points")
    if b > state.remaining:
        raise ValueError("batch larger than remaining budget")
    picks: list[int] = []
    tokens = []
    try:
        for j in range(b):
            x = _inner_select(inner, model, state.after(j))
            picks.append(x)
            if j < b - 1:
                tokens.append(model.condition(x, fictional_label(oracle, model, x)))
    finally:
        for t in reversed(tokens):
            model.rollback(t)
    return picks


def _top_sum(model: KnnModel, m: int) -> float:
    return float(model.ranking().values[:m].sum()) if m > 0 else 0.0


def batch_ens_objective_exact(model: KnnModel, state: SearchState, batch: Sequence[int], m: int | None = None) -> float:
    """Sum of batch probabilities plus the expected top-m sum over all 2^b labelings.

    ``m`` defaults to ``remaining - len(batch)``.
    """
    xs = sorted(int(x) for x in batch)
    if len(xs) > MAX_EXACT_BATCH:
        raise ValueError(f"exact enumeration is limited to {MAX_EXACT_BATCH} points")
    if m is None:
        m = max(0, state.remaining - len(xs))
    p = model.probabilities()
    immediate = float(sum(p[x] for x in xs))
    if m == 0:
        return immediate

    def expand(i: int, prob: float) -> float:
        if i == len(xs):
            return prob * _top_sum(model, m)
        x = xs[i]
        px = model.probability(x)
        total = 0.0
        for y, py in ((1, px), (0, 1.0 - px)):
            if py == 0.0:
                continue
            t = model.condition(x, y)
            try:
                total += expand(i + 1, prob * py)
            finally:
                model.rollback(t)
        return total

    return immediate + expand(0, 1.0)


def joint_label_probability(model: KnnModel, labels: dict[int, int]) -> float:
    """Chain-rule probability of a labeling, ascending id order."""
    prob, tokens = 1.0, []
    try:
        for x in sorted(labels):
            px = model.probability(x)
            prob *= px if labels[x] else 1.0 - px
            tokens.append(model.condition(x, labels[x]))
    finally:
        for t in reversed(tokens):
            model.rollback(t)
    return prob


def sample_joint_labels(model: KnnModel, batch: Sequence[int], rng: np.random.Generator, n_samples: int) -> list[dict[int, int]]:
    xs = sorted(int(x) for x in batch)
    u = rng.random((n_samples, len(xs)))
    out = []
    for s in range(n_samples):
        sample, tokens = {}, []
        try:
            for j, x in enumerate(xs):
                y = int(u[s, j] < model.probability(x))
                sample[x] = y
                tokens.append(model.condition(x, y))
        finally:
            for t in reversed(tokens):
                model.rollback(t)
        out.append(sample)
    return out


def batch_ens_objective_sampled(
    model: KnnModel,
    state: SearchState,
    batch: Sequence[int],
    samples: Sequence[dict[int, int]],
    m: int | None = None,
) -> float:
    """Monte Carlo version of :func:`batch_ens_objective_exact`."""
    xs = sorted(int(x) for x in batch)
    if m is None:
        m = max(0, state.remaining - len(xs))
    p = model.probabilities()
    immediate = float(sum(p[x] for x in xs))
    if m == 0 or not samples:
        return immediate
    acc = 0.0
    for sample in samples:
        tokens = []
        try:
            for x in xs:
                tokens.append(model.condition(x, sample[x]))
            acc += _top_sum(model, m)
        finally:
            for t in reversed(tokens):
                model.rollback(t)
    return immediate + acc / len(samples)


def batch_ens_select(
    model: KnnModel,
    state: SearchState,
    b: int,
    n_samples: int,
    rng: np.random.Generator,
) -> list[int]:
    """Greedy marginal-gain construction of a batch-ENS batch.

    Each greedy step draws ``n_samples`` labelings of the current partial
    batch (ascending id chain rule) and shares them across all candidates;
    a candidate's own label is then drawn from its conditional probability
    given that sample.  The top-sum size stays ``remaining - b`` throughout.
    """
    if n_samples < 1:
        raise ValueError("need at least one label sample")
    b = min(b, state.remaining)
    if b < 1:
        raise ValueError("no budget left")
    if model.unlabeled().size < b:
        raise EmptyPoolError(f"need {b} unlabeled points")
    m = state.remaining - b
    if m == 0:
        return [int(i) for i in model.ranking().ids[:b]]

    p_base = model.probabilities().copy()
    chosen: list[int] = []
    in_batch = np.zeros(model.n, dtype=bool)
    for step in range(b):
        cands = model.unlabeled()[~in_batch[model.unlabeled()]]
        if step == 0:
            u = rng.random((n_samples, cands.size))
            frac_pos = (u < p_base[cands]).mean(axis=0)
            s0 = conditioned_top_sums(model, cands, 0, m)
            s1 = conditioned_top_sums(model, cands, 1, m)
            future = s0 + frac_pos * (s1 - s0)
        else:
            xs = sorted(chosen)
            ux = rng.random((n_samples, len(xs)))
            u = rng.random((n_samples, cands.size))
            future = np.zeros(cands.size)
            for s in range(n_samples):
                tokens = []
                try:
                    for j, x in enumerate(xs):
                        tokens.append(model.condition(x, int(ux[s, j] < model.probability(x))))
                    pc = model.probabilities()[cands]
                    future += conditioned_top_sums(model, cands, (u[s] < pc).astype(np.float64), m)
                finally:
                    for t in reversed(tokens):
                        model.rollback(t)
            future /= n_samples
        gain = p_base[cands] + future
        top = gain.max()
        pick = int(cands[np.flatnonzero(gain == top)[0]])
        chosen.append(pick)
        in_batch[pick] = True
    return chosen


def marginal_gain_diagnostic(
    model: KnnModel,
    state: SearchState,
    pool: Sequence[int],
    b: int,
    rng: np.random.Generator,
    trials: int = 50,
) -> dict:
    """Count monotonicity and diminishing-returns violations of the exact
    batch objective on random nested sets drawn from ``pool``.  Reporting only."""
    pool = [int(x) for x in pool]
    if b + 1 > min(len(pool), MAX_EXACT_BATCH):
        raise ValueError("pool too small or batch too large for exact evaluation")
    m = max(0, state.remaining - b)
    f = lambda xs: batch_ens_objective_exact(model, state, xs, m=m)  # noqa: E731
    mono = dr = 0
    worst = 0.0
    for _ in range(trials):
        perm = rng.permutation(len(pool))
        big = [pool[i] for i in perm[:b - 1]]
        small = big[: int(rng.integers(0, len(big) + 1))]
        x = pool[perm[b - 1]]
        gain_small = f(small + [x]) - f(small)
        gain_big = f(big + [x]) - f(big)
        if gain_big < -1e-12:
            mono += 1
        if gain_big > gain_small + 1e-12:
            dr += 1
            worst = max(worst, gain_big - gain_small)
    return {"trials": trials, "monotonicity_violations": mono,
            "diminishing_returns_violations": dr, "worst_excess_gain": worst}


def best_batch_exact(model: KnnModel, state: SearchState, b: int, m: int | None = None) -> tuple[tuple[int, ...], float]:
    """Brute-force argmax of the exact batch objective (ties: lexicographically smallest)."""
    best, best_val = None, -np.inf
    for combo in itertools.combinations(model.unlabeled().tolist(), b):
        v = batch_ens_objective_exact(model, state, combo, m)
        if v > best_val:
            best, best_val = combo, v
    return best, best_val
