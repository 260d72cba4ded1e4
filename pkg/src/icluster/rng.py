"""Seedable, portable random number generation.

All randomness in this package flows through :class:`SplitMix64`, a
64-bit counter-style generator (Steele, Lea & Flood's splitmix64 update)
with Box-Muller for Gaussian variates.  The algorithm is a few lines of
integer arithmetic, so fixtures generated here can be reproduced exactly
in any language without depending on a particular library's stream.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
# 2**-53: scale for turning the top 53 bits of a draw into a float in [0, 1).
_INV_2_53 = 1.0 / (1 << 53)


class SplitMix64:
    """splitmix64 stream seeded with an arbitrary integer.

    Each ``next_u64`` call advances an internal counter by the fixed
    increment 0x9E3779B97F4A7C15 and mixes it; the sequence for a given
    seed is therefore a pure function of (seed, call index).
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of resolution."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def choice(self, seq):
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian variate via the Box-Muller transform.

        Draws two uniforms per variate (the paired variate is discarded
        so the stream position stays a simple function of call count).
        """
        u1 = self.random()
        u2 = self.random()
        # Guard: log(0) would blow up; 2**-53 is the smallest nonzero draw.
        while u1 == 0.0:
            u1 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        return mu + sigma * r * math.cos(2.0 * math.pi * u2)

    def spawn(self) -> "SplitMix64":
        """Derive an independent child stream (e.g. one per trial)."""
        return SplitMix64(self.next_u64())
