"""SplitMix64: a tiny portable PRNG with published constants.

Used instead of :mod:`random` so that seeded door and window placement is
pinned to one documented algorithm on every platform and Python version.
"""

from __future__ import annotations

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def choice(self, items):
        return items[self.below(len(items))]

    def sample(self, items, k: int) -> list:
        """``k`` distinct items, partial Fisher-Yates over a copy."""
        pool = list(items)
        k = min(k, len(pool))
        for t in range(k):
            s = t + self.below(len(pool) - t)
            pool[t], pool[s] = pool[s], pool[t]
        return pool[:k]
