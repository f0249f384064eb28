"""Seeded pseudo-randomness for reproducible sampling.

The generator is splitmix64 (Steele et al.'s mix function), chosen so a
manifest built from the same inputs and seed is byte-identical across
implementations and languages; nothing here depends on process state.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo
        bias."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n


def shuffle(items: list, rng: SplitMix64) -> None:
    """In-place Fisher-Yates."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.below(i + 1)
        items[i], items[j] = items[j], items[i]


def sample(items, k: int, rng: SplitMix64) -> list:
    """First k of a Fisher-Yates pass over a copy; order of the result
    follows the draw, not the input."""
    pool = list(items)
    n = len(pool)
    if k > n:
        raise ValueError(f"cannot sample {k} from {n}")
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
