"""Deterministic, splittable random streams.

Every randomized operation takes an explicit ``Rng`` value: a (seed,
stream_id) pair feeding a counter-based Philox generator. The same pair
yields the same draw sequence on every platform, and child streams are
derived by hashing tags into the stream id, so independent parts of a
pipeline (clips, views, individual ops) get independent, reorderable
streams from one user-facing seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass(frozen=True)
class Rng:
    """A reproducible random stream identified by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def child(self, tag: int) -> "Rng":
        """Derive an independent stream; same (self, tag) -> same child."""
        mixed = _splitmix64((self.stream_id ^ ((tag + 1) * _GOLDEN)) & _MASK64)
        return Rng(self.seed, mixed)

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this stream (call is pure)."""
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
