"""The unit-square toy problem: targets lie within 1/4 of the center or a corner."""

from __future__ import annotations

import numpy as np

from ..data import Dataset

CENTERS = np.array([[0.5, 0.5], [0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
RADIUS = 0.25


def toy_truth(points: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(points[:, None, :] - CENTERS[None, :, :], axis=2)
    return (d <= RADIUS).any(axis=1).astype(np.int8)


def generate_toy_instance(rng: np.random.Generator | int, n: int = 500) -> Dataset:
    """``n`` uniform points on [0, 1]^2; redrawn in the (rare) case that the
    point nearest the center is not a target."""
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    draws = 0
    while True:
        draws += 1
        pts = rng.random((n, 2))
        truth = toy_truth(pts)
        center = int(np.argmin(np.linalg.norm(pts - 0.5, axis=1)))
        if truth[center]:
            break
    return Dataset(pts, truth, name="toy",
                   meta={"seed": seed, "draws": draws, "center": [0.5, 0.5]})
