"""Seedable 64-bit generator used for fallback actions.

xoshiro256** with splitmix64 seed expansion. Fallback actions feed
directly into MSE, so the generator is pinned here rather than delegated
to the platform RNG: the same seed must yield the same action stream on
every machine and in every implementation of the wire protocol.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** 1.0, seeded from a single 64-bit integer via splitmix64."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        s = self.seed
        state = []
        for _ in range(4):
            out, s = _splitmix64_next(s)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        # top 53 bits -> [0, 1) with full double precision
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform_vector(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash (eval-split ranking and seed derivation)."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _MASK64
    return h


def derive_seed(base_seed: int, name: str) -> int:
    """Per-dataset RNG seed: independent of which other datasets run."""
    payload = base_seed.to_bytes(8, "little") + name.encode("utf-8")
    return fnv1a64(payload)
