"""Portable seeded random source: xoshiro256** seeded through splitmix64.

Every random draw of a simulation run (cluster ids, pseudo-ids, fading,
traffic decisions, eavesdropper key guesses) comes from one instance, so
traces are reproducible from the scenario seed alone.
"""

from typing import Protocol

MASK64 = (1 << 64) - 1


class RandomSource(Protocol):
    """What protocol code needs from a random generator."""

    def randbytes(self, n: int) -> bytes: ...


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    """splitmix64, used only to expand a 64-bit seed into xoshiro state."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class Xoshiro256StarStar:
    """xoshiro256** 1.0 generator."""

    def __init__(self, seed: int):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        expander = SplitMix64(seed)
        self._s = [expander.next_u64() for _ in range(4)]

    @classmethod
    def from_state(cls, state: tuple[int, int, int, int]) -> "Xoshiro256StarStar":
        """Generator resumed from four raw 64-bit state words (not all zero)."""
        if len(state) != 4 or not all(0 <= w < 2**64 for w in state) or not any(state):
            raise ValueError("state is four unsigned 64-bit words, not all zero")
        rng = cls.__new__(cls)
        rng._s = list(state)
        return rng

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randbytes(self, n: int) -> bytes:
        """``n`` bytes taken little-endian from successive outputs."""
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "little")
        return bytes(out[:n])
