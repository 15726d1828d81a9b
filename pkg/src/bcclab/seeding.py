"""Deterministic random streams.

Every stochastic routine takes either an ``np.random.Generator`` or an integer
seed.  Parallel work derives one stream per (seed, label, index) so results do
not depend on scheduling.
"""

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(None if seed_or_rng is None
                                 else int(seed_or_rng) & SEED_MASK)


def derive(seed: int, label: str, index: int = 0) -> np.random.Generator:
    entropy = [int(seed) & SEED_MASK, zlib.crc32(label.encode()), int(index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_int(seed: int, label: str, index: int = 0) -> int:
    return int(derive(seed, label, index).integers(0, 2**63 - 1))
