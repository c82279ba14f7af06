"""Counter-based random numbers keyed by ``(seed, stream)``.

Every draw is a pure function ``u(seed, stream, counter)``: the SplitMix64
finaliser applied to a Weyl sequence. Rays use their index as the stream
and a fixed counter slot per bounce, so a ray's path never depends on which
thread traced it or how many other rays were traced before it.
"""

from __future__ import annotations

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed + GAMMA) + (stream + 1) * GAMMA)


def uniform_at(key: int, counter: int) -> float:
    """Uniform double in [0, 1) for draw number ``counter`` of a stream."""
    return (mix64(key + (counter + 1) * GAMMA) >> 11) * _INV53


class CounterRNG:
    """Sequential view of one counter-based stream.

    ``uniform()`` returns successive draws and advances ``counter``; two
    instances with the same ``(seed, stream, counter)`` produce identical
    sequences.
    """

    __slots__ = ("seed", "stream", "counter", "key")

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = int(counter)
        self.key = stream_key(self.seed, self.stream)

    def uniform(self) -> float:
        u = uniform_at(self.key, self.counter)
        self.counter += 1
        return u

    def at(self, counter: int) -> float:
        """Draw at an absolute counter position without advancing."""
        return uniform_at(self.key, counter)

    def spawn(self, stream: int) -> "CounterRNG":
        return CounterRNG(self.seed, stream)

    def __repr__(self):
        return f"CounterRNG(seed={self.seed}, stream={self.stream}, counter={self.counter})"


# numba versions; all arithmetic stays in uint64 so products wrap mod 2**64


@nb.njit(cache=True, inline="always")
def nb_mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def nb_stream_key(seed, stream):
    g = np.uint64(GAMMA)
    return nb_mix64(nb_mix64(np.uint64(seed) + g) + (np.uint64(stream) + np.uint64(1)) * g)


@nb.njit(cache=True, inline="always")
def nb_uniform_at(key, counter):
    g = np.uint64(GAMMA)
    z = nb_mix64(key + (np.uint64(counter) + np.uint64(1)) * g)
    return np.float64(z >> np.uint64(11)) * _INV53
