"""Myopic baselines: one-step, two-step lookahead, greedy-batch and UGB.

Ties are broken by ascending point id everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lookahead import expected_future
from .model import KnnModel, SearchState
from .topsum import TopSumIndex

KINDS = ("one-step", "two-step", "greedy-batch", "ugb", "ens", "ss", "batch-ens")
SEQUENTIAL_KINDS = ("one-step", "two-step", "ens")
ORACLE_CODES = {"s": "sampling", "m": "most-likely", "0": "always-0", "1": "always-1"}
INNER_CODES = {"one": "one-step", "two": "two-step", "ens": "ens"}


class EmptyPoolError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    oracle: str | None = None
    inner: str | None = None
    samples: int | None = None
    ugb_ratio: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if (self.kind == "ss") != (self.oracle is not None and self.inner is not None):
            raise ValueError("oracle and inner policy are required exactly for 'ss'")
        if self.oracle is not None and self.oracle not in ORACLE_CODES.values():
            raise ValueError(f"unknown oracle {self.oracle!r}")
        if self.inner is not None and self.inner not in SEQUENTIAL_KINDS:
            raise ValueError(f"unknown inner policy {self.inner!r}")
        if (self.kind == "batch-ens") != (self.samples is not None):
            raise ValueError("sample count is required exactly for 'batch-ens'")
        if self.samples is not None and self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if (self.kind == "ugb") != (self.ugb_ratio is not None):
            raise ValueError("ratio is required exactly for 'ugb'")
        if self.ugb_ratio is not None and not 0 < self.ugb_ratio < 1:
            raise ValueError("ugb ratio must lie in (0, 1)")

    @property
    def sequential_only(self) -> bool:
        return self.kind in SEQUENTIAL_KINDS

    def __str__(self) -> str:
        if self.kind == "ss":
            inner = {v: k for k, v in INNER_CODES.items()}[self.inner]
            oracle = {v: k for k, v in ORACLE_CODES.items()}[self.oracle]
            return f"ss-{inner}-{oracle}"
        if self.kind == "batch-ens":
            return f"batch-ens:{self.samples}"
        if self.kind == "ugb":
            return f"ugb:{self.ugb_ratio:g}"
        return self.kind


def parse_policy(text: str) -> PolicySpec:
    """Parse ``one-step``, ``ugb:0.3``, ``ss-ens-0``, ``batch-ens:16`` and friends."""
    text = text.strip()
    if text in ("one-step", "two-step", "greedy-batch", "ens"):
        return PolicySpec(text)
    if text.startswith("ugb:"):
        return PolicySpec("ugb", ugb_ratio=float(text[4:]))
    if text.startswith("batch-ens:"):
        return PolicySpec("batch-ens", samples=int(text[10:]))
    if text.startswith("ss-"):
        parts = text.split("-")
        if len(parts) == 3 and parts[1] in INNER_CODES and parts[2] in ORACLE_CODES:
            return PolicySpec("ss", oracle=ORACLE_CODES[parts[2]], inner=INNER_CODES[parts[1]])
    raise ValueError(f"cannot parse policy {text!r}")


def _require(model: KnnModel, count: int = 1) -> None:
    if model.unlabeled().size < count:
        raise EmptyPoolError(f"need {count} unlabeled points, have {model.unlabeled().size}")


def one_step_select(model: KnnModel, state: SearchState | None = None) -> int:
    _require(model)
    return int(model.ranking().ids[0])


def greedy_batch_select(model: KnnModel, state: SearchState | None, b: int) -> list[int]:
    _require(model, b)
    return [int(i) for i in model.ranking().ids[:b]]


def two_step_score(model: KnnModel, state: SearchState, x: int, topsum: TopSumIndex | None = None) -> float:
    """p(x) + E_y[max probability after observing (x, y)], horizon-truncated."""
    p = model.probability(x)
    if state.remaining <= 1:
        return p
    if topsum is None:
        topsum = TopSumIndex.from_model(model)
    affected = model.affected_set(x)
    excluded = {int(x)} | {int(z) for z in affected}
    rest = topsum.max_excluding(excluded)[1] if len(topsum) > len(excluded) else 0.0
    best = []
    for y in (0, 1):
        _, upd = model.conditioned_probabilities(x, y)
        best.append(max(rest, float(upd.max())) if upd.size else rest)
    return p + (p * best[1] + (1 - p) * best[0])


def two_step_scores(model: KnnModel, state: SearchState, candidates: np.ndarray | None = None) -> np.ndarray:
    cands = model.unlabeled() if candidates is None else np.asarray(candidates, dtype=np.int64)
    p, future = expected_future(model, cands, 1 if state.remaining > 1 else 0)
    return p + future


def two_step_select(model: KnnModel, state: SearchState) -> int:
    _require(model)
    if state.remaining <= 1:
        return one_step_select(model, state)
    cands = model.unlabeled()
    scores = two_step_scores(model, state, cands)
    return int(cands[np.flatnonzero(scores == scores.max())[0]])


def ugb_select(model: KnnModel, state: SearchState | None, b: int, r: float) -> list[int]:
    """``ceil(r*b)`` most uncertain points, then the most probable of the rest."""
    _require(model, b)
    ids = model.unlabeled()
    p = model.probabilities()[ids]
    # tolerance keeps ceil(0.3 * 10) at 3
    n_unc = min(b, math.ceil(r * b - 1e-9))
    order = np.lexsort((ids, -p, np.abs(p - 0.5)))
    uncertain = ids[order[:n_unc]]
    taken = set(int(i) for i in uncertain)
    greedy = [int(i) for i in model.ranking().ids if int(i) not in taken][: b - n_unc]
    return [int(i) for i in uncertain] + greedy
