"""One entry point for every policy string."""

from __future__ import annotations

import numpy as np

from .batch import FictionalOracle, batch_ens_select, sequential_simulation_batch
from .ens import ens_select
from .model import KnnModel, SearchState
from .myopic import (
    PolicySpec,
    greedy_batch_select,
    one_step_select,
    parse_policy,
    two_step_select,
    ugb_select,
)


def select(
    spec: PolicySpec | str,
    model: KnnModel,
    state: SearchState,
    rng: np.random.Generator | None = None,
    pruning: bool = True,
    bound: str = "ones",
) -> tuple[list[int], dict]:
    """Choose the next batch (size ``state.next_batch_size``).

    Returns the chosen ids and a dict of per-iteration diagnostics.
    """
    if isinstance(spec, str):
        spec = parse_policy(spec)
    b = state.next_batch_size
    if b < 1:
        raise ValueError("no budget left")
    if spec.sequential_only and state.batch_size > 1:
        raise ValueError(f"policy {spec} is sequential; use it inside ss-* for batches")
    info: dict = {}
    if spec.kind == "one-step":
        return [one_step_select(model, state)], info
    if spec.kind == "two-step":
        return [two_step_select(model, state)], info
    if spec.kind == "ens":
        x, ev, stats = ens_select(model, state, pruning=pruning, bound=bound)
        info["pruned_fraction"] = stats.fraction_pruned
        info["score"] = ev.score
        return [x], info
    if spec.kind == "greedy-batch":
        return greedy_batch_select(model, state, b), info
    if spec.kind == "ugb":
        return ugb_select(model, state, b, spec.ugb_ratio), info
    if spec.kind == "ss":
        oracle = FictionalOracle(spec.oracle, rng if spec.oracle == "sampling" else None)
        return sequential_simulation_batch(model, state, spec.inner, oracle, b), info
    if spec.kind == "batch-ens":
        if rng is None:
            raise ValueError("batch-ens needs a random generator")
        return batch_ens_select(model, state, b, spec.samples, rng), info
    raise ValueError(f"unhandled policy {spec}")
