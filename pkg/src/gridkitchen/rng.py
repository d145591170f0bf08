"""Counter-based 64-bit PRNG used everywhere randomness is needed.

The generator is a splitmix64 stream: the state advances by a fixed odd
increment on every draw and the output is a finalizing hash of the state.
This makes the state a single integer that serializes trivially into game
states and replay files, and the same arithmetic vectorizes over numpy
uint64 arrays for the batched engine.

Determinism contract: identical state -> identical draw sequence, in this
implementation, on every platform. Cross-implementation bit compatibility
is a non-goal.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanching hash of a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Deterministic child seed for an independent stream (seats, episodes)."""
    return mix64((seed + GAMMA * (stream + 1)) & MASK64)


class Rng:
    """Serializable splitmix64 stream.

    The full generator state is the single integer ``state``; copying it
    copies the stream.
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    @classmethod
    def from_seed(cls, seed: int) -> "Rng":
        return cls(mix64(seed & MASK64))

    def copy(self) -> "Rng":
        return Rng(self.state)

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection of the biased tail."""
        if n <= 0:
            raise ValueError(f"randrange bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def __eq__(self, other):
        return isinstance(other, Rng) and self.state == other.state

    def __repr__(self):
        return f"Rng(state={self.state:#018x})"
