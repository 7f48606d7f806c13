"""Seeded, platform-stable random streams.

Every stochastic operation in the package takes an explicit seed and builds
its generator here. Batch items get independent sub-streams derived by
hashing (master_seed, key...) so instances can be generated in any order or
in parallel without changing the results.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["rng_from_seed", "substream"]


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        value = int(key)
        if value < 0:
            raise ValueError(f"seed keys must be non-negative, got {value}")
        return value
    if isinstance(key, str):
        # Stable across processes and platforms, unlike hash().
        return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")
    raise TypeError(f"seed key must be int or str, got {type(key).__name__}")


def rng_from_seed(seed: int) -> np.random.Generator:
    """PCG64 generator for a bare 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_key_to_int(seed))))


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, keys...); keys are ints or short strings."""
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
