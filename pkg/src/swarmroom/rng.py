"""Seed derivation and random-stream construction.

Every simulation owns one ``numpy.random.Generator`` backed by the Philox
4x64 counter-based bit generator, keyed directly with the 64-bit seed (no
SeedSequence hashing). Child seeds are derived with a SplitMix64 step, which
is a bijection on 64-bit integers, so for a fixed parent the map
``index -> child seed`` is injective.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# stream tags for derive_seed
BEACONS = 1
PRIOR = 2
TABLE = 3
RECOVERY = 4
INFER = 5
SMC = 6
NULL = 7


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *path: int) -> int:
    """Derive a child seed from ``base`` by walking the integer ``path``."""
    s = int(base) & MASK64
    for p in path:
        s = _mix64((s + _GOLDEN * (int(p) + 1)) & MASK64)
    return s


def make_rng(seed: int) -> np.random.Generator:
    """Return the canonical generator for ``seed`` (Philox keyed by the seed)."""
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed))
