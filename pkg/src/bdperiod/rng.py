"""Seeded random streams for trajectory simulation.

The generator is splitmix64: a public, named 64-bit algorithm chosen over
any platform default so that sample paths are reproducible across language
runtimes.  Each trajectory owns an independent stream; fleet member i is
seeded with the i-th output of a master stream, which makes a whole fleet a
pure function of (master_seed, fleet_size).

Uniform doubles are ``(z >> 11) * 2**-53``, giving values in [0, 1).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
INV53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance one step; returns (new_state, output)."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    z = z ^ (z >> 31)
    return state, z


class SplitMix64:
    """Reference stream; the simulation kernel reimplements the same steps."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, z = splitmix64_next(self.state)
        return z

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * INV53


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Per-trajectory seeds: the first ``count`` outputs of the master stream."""
    if count < 1:
        raise ValueError("count must be >= 1")
    stream = SplitMix64(master_seed)
    return [stream.next_u64() for _ in range(count)]
