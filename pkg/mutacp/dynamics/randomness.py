"""
Keyed random streams shared between coupled processes.

Every stream is generated by its own numpy Generator whose SeedSequence is the
master entropy with a spawn key hashed from the stream key, so a key replays
the same sequence no matter who asks first or in which order.
"""
from __future__ import annotations

import bisect
import hashlib

import numpy as np

from mutacp.exceptions import ParameterError

DEATH_CLOCK = "death"
BIRTH_CLOCK = "birth"
MUTATION_MARK = "mark"


def make_rng(seed) -> np.random.Generator:
    """Build a generator from an integer seed, a SeedSequence or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def key_words(key) -> tuple[int, ...]:
    """Hash a stream key to four 32-bit words usable as a spawn key."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class ExponentialStream:
    """Arrival times of a Poisson process, materialized on demand."""

    def __init__(self, rng: np.random.Generator, rate: float):
        self._rng = rng
        self._rate = rate
        self._times: list[float] = []

    def _extend(self, count: int) -> None:
        gaps = self._rng.standard_exponential(count) / self._rate
        total = self._times[-1] if self._times else 0.0
        for gap in gaps:
            total += float(gap)
            self._times.append(total)

    def arrival(self, i: int) -> float:
        """The time of the i-th arrival, counting from 1."""
        if i < 1:
            raise ParameterError(f"Arrival index must be positive, got {i}")
        if self._rate == 0:
            return float("inf")
        while len(self._times) < i:
            self._extend(max(8, i - len(self._times)))
        return self._times[i - 1]

    def next_after(self, t: float) -> tuple[int, float]:
        """The index and time of the first arrival strictly after t."""
        if self._rate == 0:
            return 1, float("inf")
        while not self._times or self._times[-1] <= t:
            self._extend(8)
        i = bisect.bisect_right(self._times, t)
        return i + 1, self._times[i]


class BernoulliStream:
    """An i.i.d. sequence of Bernoulli(p) marks, materialized on demand."""

    def __init__(self, rng: np.random.Generator, p: float):
        self._rng = rng
        self._p = p
        self._marks: list[bool] = []

    def mark(self, i: int) -> bool:
        """The i-th mark, counting from 1."""
        if i < 1:
            raise ParameterError(f"Mark index must be positive, got {i}")
        while len(self._marks) < i:
            self._marks.extend(bool(u < self._p) for u in self._rng.random(8))
        return self._marks[i - 1]


class RandomnessSource:
    """
    The Poisson-stream construction of the coupled processes.

    Type k dies at the arrivals of stream (death, k), rate 1. The pathogen on v
    tries to give birth on w at the arrivals of stream (birth, v, w), rate
    lambda, and the i-th such attempt mutates when mark i of stream
    (mark, v, w) is one.
    """

    def __init__(self, seed: int | np.random.SeedSequence | None, birth_rate: float, mutation_prob: float):
        if birth_rate < 0:
            raise ParameterError(f"Birth rate must be nonnegative, got {birth_rate}")
        if not 0 <= mutation_prob <= 1:
            raise ParameterError(f"Mutation probability must lie in [0, 1], got {mutation_prob}")
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.entropy = root.entropy
        self._spawn_key = tuple(root.spawn_key)
        self.birth_rate = birth_rate
        self.mutation_prob = mutation_prob
        self._streams: dict = {}

    def _generator(self, key) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.entropy, spawn_key=self._spawn_key + key_words(key))
        return np.random.default_rng(sequence)

    def death_clock(self, type_id: int) -> ExponentialStream:
        key = (DEATH_CLOCK, type_id)
        if key not in self._streams:
            self._streams[key] = ExponentialStream(self._generator(key), 1.0)
        return self._streams[key]

    def birth_clock(self, v, w) -> ExponentialStream:
        key = (BIRTH_CLOCK, v, w)
        if key not in self._streams:
            self._streams[key] = ExponentialStream(self._generator(key), self.birth_rate)
        return self._streams[key]

    def mutation_mark(self, v, w, i: int) -> bool:
        key = (MUTATION_MARK, v, w)
        if key not in self._streams:
            self._streams[key] = BernoulliStream(self._generator(key), self.mutation_prob)
        return self._streams[key].mark(i)
