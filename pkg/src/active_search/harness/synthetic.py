"""Clustered 2-d surrogate for screening-style pools: a few of many tight
clusters are active, the rest of the pool is background."""

from __future__ import annotations

import numpy as np

from ..data import Dataset


def generate_clustered_instance(
    rng: np.random.Generator | int,
    n: int = 2000,
    clusters: int = 25,
    active: int = 3,
    clustered_fraction: float = 0.6,
    spread: float = 0.03,
) -> Dataset:
    if not 0 < active <= clusters:
        raise ValueError("need 0 < active <= clusters")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    centers = rng.uniform(0.1, 0.9, size=(clusters, 2))
    n_clustered = int(round(clustered_fraction * n))
    member = rng.integers(clusters, size=n_clustered)
    pts = np.concatenate([centers[member] + rng.normal(0.0, spread, size=(n_clustered, 2)),
                          rng.random((n - n_clustered, 2))])
    truth = np.concatenate([(member < active).astype(np.int8), np.zeros(n - n_clustered, dtype=np.int8)])
    # keep cluster members from sitting at the front of the id order
    perm = rng.permutation(n)
    return Dataset(pts[perm], truth[perm], name="clustered",
                   meta={"seed": seed, "center": centers[0].tolist()})
