"""Portable SplitMix64 random streams.

SplitMix64 is counter based: the i-th output of a stream is
``mix64(seed + (i + 1) * GAMMA)``, so blocks of outputs can be computed
with vectorised uint64 arithmetic and the same seed reproduces the same
numbers on any platform.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(base: int, *keys) -> int:
    """Fold ``keys`` (ints or strings) into ``base`` to get an independent seed.

    Used for per-image seeds: ``derive_seed(dataset_seed, source_id, epoch)``.
    The result does not depend on call order across images, so parallel or
    reordered processing gives the same per-image randomness.
    """
    h = mix64(int(base) & MASK64)
    for key in keys:
        digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
        h = mix64(h ^ int.from_bytes(digest, "little") ^ GAMMA)
    return h


class SplitMix64:
    """Sequential SplitMix64 generator with a few convenience draws."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def u64_array(self, n: int) -> np.ndarray:
        """Next ``n`` outputs as a uint64 array (advances the stream by ``n``)."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix64_array(states)
        self.state = (self.state + n * GAMMA) & MASK64
        return out

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def random_array(self, n: int) -> np.ndarray:
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def below(self, bound: int) -> int:
        """Integer in [0, bound) by multiply-shift (bias < bound / 2**64)."""
        return (self.next_u64() * bound) >> 64

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of ``range(n)``."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.asarray(perm, dtype=np.int64)
