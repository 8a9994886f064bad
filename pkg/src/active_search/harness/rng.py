"""Seeded random streams.

Every stream is a PCG64 generator seeded from
``SeedSequence(entropy=base_seed, spawn_key=(replication, crc32(tag)))``, so
a (base seed, replication id, purpose tag) triple always yields the same
numbers, and streams with different tags are independent.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(base_seed: int, replication: int, tag: str) -> np.random.Generator:
    key = (int(replication), zlib.crc32(tag.encode("utf-8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(base_seed), spawn_key=key)))
