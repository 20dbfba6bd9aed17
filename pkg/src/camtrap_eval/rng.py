"""Portable deterministic randomness.

Every random draw in the package goes through :class:`SplitMix64` so that a
run is bit-reproducible across platforms and across implementations in other
languages.  Sub-streams are keyed by a text label (an image id or a fold
index) as ``SplitMix64(seed ^ fnv1a_64(label))``.
"""

from __future__ import annotations

import math
from typing import MutableSequence, TypeVar

T = TypeVar("T")

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_POISSON_CHUNK = 30.0


def fnv1a_64(data: bytes | str) -> int:
    """64-bit FNV-1a hash of ``data`` (str is encoded as UTF-8)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


class SplitMix64:
    """The splitmix64 generator with a few derived distributions."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.state = seed

    @classmethod
    def substream(cls, seed: int, label: str | int) -> "SplitMix64":
        return cls((seed & MASK64) ^ fnv1a_64(str(label)))

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def gauss(self) -> float:
        """Standard normal variate (Box-Muller, cosine branch only)."""
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def poisson(self, lam: float) -> int:
        """Poisson variate via Knuth's product method.

        Large rates are split into chunks of at most 30 so ``exp(-lam)``
        never underflows.
        """
        if lam < 0:
            raise ValueError("rate must be non-negative")
        total = 0
        remaining = lam
        while remaining > 0:
            chunk = min(remaining, _POISSON_CHUNK)
            remaining -= chunk
            threshold = math.exp(-chunk)
            p = self.uniform()
            while p > threshold:
                total += 1
                p *= self.uniform()
        return total

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates shuffle, swapping from the end."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
