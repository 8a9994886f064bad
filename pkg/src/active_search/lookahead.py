"""Vectorized top-m sums after a one-point hypothetical observation.

For each candidate c and label y_c this computes the sum of the m largest
unlabeled probabilities once (c, y_c) has been observed, with c itself taken
out of the pool.  Only the reverse neighbors of c change, so each row is the
head of the current ranking with c and its affected points zeroed out, plus
the affected points' updated values appended.  A head of length
``m + max_degree + 1`` always contains the top-m survivors.

Row contents depend only on (candidate, label, m, model state), never on
which other candidates share the call, so results are bit-reproducible
across chunkings and candidate subsets.
"""

from __future__ import annotations

import numpy as np

from .model import KnnModel

_CHUNK_ELEMS = 1 << 21


def conditioned_top_sums(
    model: KnnModel,
    candidates: np.ndarray,
    labels,
    m: int,
    optimistic: bool = False,
) -> np.ndarray:
    """Top-m sums after conditioning each candidate on its label.

    ``labels`` is a scalar or one label per candidate.  With ``optimistic``
    every affected probability is replaced by 1 instead (an upper bound).
    """
    cands = np.asarray(candidates, dtype=np.int64)
    out = np.zeros(cands.size)
    if m <= 0 or cands.size == 0:
        return out
    ranking = model.ranking()
    if (ranking.rank[cands] < 0).any():
        raise ValueError("candidates must be unlabeled")
    vals, rank = ranking.values, ranking.rank
    nbr_ids, nbr_w = model.graph.reverse_padded()
    width_k = nbr_ids.shape[1]
    head = min(vals.size, m + width_k + 1)
    width = head + width_k
    y = np.broadcast_to(np.asarray(labels, dtype=np.float64), cands.shape)
    unl = model.unlabeled_mask()
    base, spos, sw, gamma = model._base, model.sum_w_pos, model.sum_w, model.gamma

    step = max(1, _CHUNK_ELEMS // max(1, width))
    for s in range(0, cands.size, step):
        c = cands[s : s + step]
        r = c.size
        rows = np.empty((r, width))
        rows[:, :head] = vals[:head]
        if width_k:
            nb = nbr_ids[c]
            w = nbr_w[c]
            nbc = np.maximum(nb, 0)
            valid = (nb >= 0) & unl[nbc]
            if optimistic:
                upd = valid.astype(np.float64)
            else:
                upd = (base[nbc] + (spos[nbc] + w * y[s : s + step, None])) / (gamma + (sw[nbc] + w))
                upd[~valid] = 0.0
            rows[:, head:] = upd
            rr = rank[nbc]
            hit = valid & (rr < head)
            hi, hj = np.nonzero(hit)
            rows[hi, rr[hi, hj]] = 0.0
        own = rank[c]
        mine = own < head
        rows[np.flatnonzero(mine), own[mine]] = 0.0
        if m >= width:
            out[s : s + step] = rows.sum(axis=1)
        else:
            kth = width - m
            out[s : s + step] = np.partition(rows, kth, axis=1)[:, kth:].sum(axis=1)
    return out


def expected_future(model: KnnModel, candidates: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and expected top-m sums E_y[S_y] for each candidate."""
    cands = np.asarray(candidates, dtype=np.int64)
    p = model.probabilities()[cands]
    if m <= 0:
        return p, np.zeros(cands.size)
    s0 = conditioned_top_sums(model, cands, 0, m)
    s1 = conditioned_top_sums(model, cands, 1, m)
    # written so that s0 == s1 gives s0 exactly
    return p, s0 + p * (s1 - s0)
