"""Deterministic pseudo-randomness for splits, sampling and weight init.

Everything stochastic in this package flows through SplitMix64 so that a run
is fully determined by its integer seed and can be replicated from this file
alone, in any language:

    state     <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z         <- state
    z         <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
    z         <- (z XOR (z >> 27)) * 0x94D049BB133111EB  mod 2^64
    output    <- z XOR (z >> 31)

Doubles in [0, 1) take the top 53 bits of an output word. Bounded integers
use rejection sampling (no modulo bias). Shuffles are Fisher-Yates from the
top index down. Gaussians are Box-Muller pairs.

Independent streams (per-tree seeds, per-epoch shuffles, ...) are derived
with :func:`derive_seed`, which hash-combines the master seed with integer
stream tags, so adding a consumer never perturbs existing ones.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *stream: int) -> int:
    """Derive a child seed from ``seed`` and one or more stream tags."""
    acc = seed & _MASK64
    for tag in stream:
        acc = _mix((acc + _GOLDEN) & _MASK64) ^ _mix((tag ^ _GOLDEN) & _MASK64)
        acc &= _MASK64
    return _mix((acc + _GOLDEN) & _MASK64)


class SplitMix64:
    """Seedable 64-bit generator; the exact update rule is in the module docstring."""

    __slots__ = ("_state", "_gauss_cache")

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._gauss_cache: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError(f"randint bound must be positive, got {n}")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices drawn from range(n), order randomized."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randint(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (second value of each pair cached)."""
        if self._gauss_cache is not None:
            z = self._gauss_cache
            self._gauss_cache = None
        else:
            u1 = 1.0 - self.random()  # (0, 1]: keeps log() finite
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._gauss_cache = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def spawn(self, *stream: int) -> "SplitMix64":
        """Child generator keyed by stream tags; parent state is untouched."""
        return SplitMix64(derive_seed(self._state, *stream))
