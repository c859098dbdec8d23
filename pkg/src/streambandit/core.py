"""Bandit instances, gap vectors and seeded randomness.

Arm indices are 1-based everywhere in the public API.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised for malformed bandit instances or arm indices."""


@dataclass(frozen=True)
class BanditInstance:
    means: tuple[float, ...]
    best: int = field(init=False)
    unique_best: bool = field(init=False)

    def __post_init__(self):
        if len(self.means) == 0:
            raise InstanceError("instance needs at least one arm")
        for i, mu in enumerate(self.means, start=1):
            if not (0.0 <= mu <= 1.0):
                raise InstanceError(f"mean out of range at index {i}")
        top = max(self.means)
        object.__setattr__(self, "best", self.means.index(top) + 1)
        object.__setattr__(self, "unique_best", self.means.count(top) == 1)

    @property
    def n(self) -> int:
        return len(self.means)

    @property
    def best_mean(self) -> float:
        return self.means[self.best - 1]

    def best_index(self) -> int:
        return self.best

    def mean(self, arm: int) -> float:
        if not 1 <= arm <= self.n:
            raise InstanceError(f"arm {arm} out of range 1..{self.n}")
        return self.means[arm - 1]

    def to_csv_line(self) -> str:
        return ",".join(repr(mu) for mu in self.means)

    @classmethod
    def from_csv_line(cls, line: str) -> "BanditInstance":
        return make_instance([float(tok) for tok in line.strip().split(",") if tok])


@dataclass(frozen=True)
class GapVector:
    gaps: tuple[float, ...]

    def __post_init__(self):
        if not self.gaps or min(self.gaps) != 0.0:
            raise InstanceError("gap vector must contain a zero entry")
        if any(g < 0.0 or g > 1.0 for g in self.gaps):
            raise InstanceError("gaps must lie in [0, 1]")

    def __len__(self):
        return len(self.gaps)

    def __getitem__(self, i):
        return self.gaps[i]

    def positive(self) -> list[float]:
        return [g for g in self.gaps if g > 0.0]


def make_instance(means: Sequence[float]) -> BanditInstance:
    return BanditInstance(tuple(float(mu) for mu in means))


def gap_vector(instance: BanditInstance) -> GapVector:
    top = instance.best_mean
    return GapVector(tuple(top - mu for mu in instance.means))


class SeededRng:
    """A numpy PCG64 stream addressed by ``(master seed, child path)``.

    Children are derived through ``SeedSequence.spawn_key`` so child ``i`` of a
    given master seed is the same stream no matter which process builds it.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(path)
        self._counter = 0
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    @property
    def bit_generator(self):
        return self.generator.bit_generator

    def child(self, index: int) -> "SeededRng":
        return SeededRng(self.seed, self.path + (int(index),))

    def spawn(self) -> "SeededRng":
        c = self.child(self._counter)
        self._counter += 1
        return c

    def uniform(self) -> float:
        return self.generator.random()

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)`` from a single double draw."""
        return min(int(self.generator.random() * k), k - 1)


def sample_reward(instance: BanditInstance, arm: int, rng: SeededRng) -> int:
    mu = instance.mean(arm)
    return 1 if rng.uniform() < mu else 0
