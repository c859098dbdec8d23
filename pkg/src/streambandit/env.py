"""Single-pass, m-slot, T-round streaming environment with regret accounting.

Policies see arms only through :class:`SlotHandle` objects and the
:class:`ArmStats` attached to them; the instance means stay private to the
environment.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO

from .core import BanditInstance, SeededRng, gap_vector


class EnvError(RuntimeError):
    pass


class ConfigError(EnvError, ValueError):
    pass


class CapacityError(EnvError):
    pass


class EndOfStreamError(EnvError):
    pass


class InvalidSlotError(EnvError):
    pass


class BudgetExhausted(EnvError):
    pass


class PhaseError(EnvError):
    pass


@dataclass
class ArmStats:
    arm: int
    pulls: int = 0
    reward_sum: int = 0

    @property
    def mean(self) -> float:
        if self.pulls == 0:
            raise ValueError(f"arm {self.arm} has no pulls; empirical mean undefined")
        return self.reward_sum / self.pulls


@dataclass(frozen=True)
class SlotHandle:
    slot: int
    serial: int


@dataclass
class RegretTrace:
    gaps: tuple[float, ...]
    best_mean: float
    pulls: list[int]
    rounds: int = 0
    reward_total: int = 0
    marker: int | None = None
    pulls_at_marker: list[int] | None = None
    reward_at_marker: int = 0

    @staticmethod
    def weighted(gaps, counts) -> float:
        return math.fsum(g * c for g, c in zip(gaps, counts))

    @property
    def regret(self) -> float:
        return self.weighted(self.gaps, self.pulls)

    @property
    def realized_regret(self) -> float:
        return self.rounds * self.best_mean - self.reward_total

    @property
    def marked(self) -> bool:
        return self.marker is not None

    def phase_split(self) -> tuple[int, float, int, float]:
        """Return ``(L1, R1, L2, R2)``; an unmarked trace is all exploration."""
        total = self.regret
        if self.marker is None:
            return self.rounds, total, 0, 0.0
        r1 = self.weighted(self.gaps, self.pulls_at_marker)
        return self.marker, r1, self.rounds - self.marker, total - r1


class StreamEnv:
    def __init__(
        self,
        instance: BanditInstance,
        m: int,
        T: int,
        rng: SeededRng,
        log_events: bool = False,
    ):
        if m < 1:
            raise ConfigError(f"memory size m must be >= 1, got {m}")
        if T < 1:
            raise ConfigError(f"horizon T must be >= 1, got {T}")
        self._instance = instance
        self._means = instance.means
        self.rng = rng
        self._uniform = rng.generator.random
        self.n = instance.n
        self.m = int(m)
        self.T = int(T)
        self._slots: list[ArmStats | None] = [None] * self.m
        self._serials = [0] * self.m
        self._next_serial = 1
        self._cursor = 1
        self.trace = RegretTrace(
            gaps=gap_vector(instance).gaps,
            best_mean=instance.best_mean,
            pulls=[0] * self.n,
        )
        self.reads: list[int] = []
        self.events: list[tuple] | None = [] if log_events else None
        self._running_regret = 0.0
        self.memory_at_marker: tuple[int, ...] | None = None

    # -- observable state -------------------------------------------------

    @property
    def cursor(self) -> int:
        return self._cursor

    @property
    def rounds_used(self) -> int:
        return self.trace.rounds

    @property
    def remaining(self) -> int:
        return self.T - self.trace.rounds

    @property
    def occupancy(self) -> int:
        return sum(s is not None for s in self._slots)

    @property
    def stream_exhausted(self) -> bool:
        return self._cursor > self.n

    def handles(self) -> list[SlotHandle]:
        return [
            SlotHandle(i, self._serials[i])
            for i, s in enumerate(self._slots)
            if s is not None
        ]

    def stats(self, handle: SlotHandle) -> ArmStats:
        return self._resolve(handle)

    # -- storage operations (free) ----------------------------------------

    def read_next(self) -> SlotHandle:
        if self._cursor > self.n:
            raise EndOfStreamError("stream exhausted: all arms already read")
        try:
            slot = self._slots.index(None)
        except ValueError:
            raise CapacityError(f"memory full ({self.m} slots)") from None
        arm = self._cursor
        self._cursor += 1
        self._slots[slot] = ArmStats(arm)
        self._serials[slot] = self._next_serial
        self._next_serial += 1
        self.reads.append(arm)
        self._log("read", arm, "")
        return SlotHandle(slot, self._serials[slot])

    def discard(self, handle: SlotHandle) -> None:
        stats = self._resolve(handle)
        self._slots[handle.slot] = None
        self._serials[handle.slot] = 0
        self._log("discard", stats.arm, "")

    # -- the one round-consuming action -----------------------------------

    def pull(self, handle: SlotHandle) -> int:
        stats = self._resolve(handle)
        trace = self.trace
        if trace.rounds >= self.T:
            raise BudgetExhausted(f"all {self.T} rounds used")
        arm = stats.arm
        reward = 1 if self._uniform() < self._means[arm - 1] else 0
        stats.pulls += 1
        stats.reward_sum += reward
        trace.pulls[arm - 1] += 1
        trace.rounds += 1
        trace.reward_total += reward
        if self.events is not None:
            self._running_regret += trace.gaps[arm - 1]
            self._log("pull", arm, reward)
        return reward

    def mark_exploitation_start(self) -> None:
        trace = self.trace
        if trace.marker is not None:
            raise PhaseError("exploitation start already marked")
        trace.marker = trace.rounds
        trace.pulls_at_marker = list(trace.pulls)
        trace.reward_at_marker = trace.reward_total
        self.memory_at_marker = tuple(s.arm for s in self._slots if s is not None)
        self._log("mark", "", "")

    # -- privileged diagnostics -------------------------------------------

    def best_in_memory_at_marker(self) -> bool:
        """Whether a max-mean arm was stored when exploitation began."""
        if self.memory_at_marker is None:
            return False
        top = self._instance.best_mean
        return any(self._means[a - 1] == top for a in self.memory_at_marker)

    def write_trace_csv(self, fh: IO[str], trial: int | None = None) -> None:
        if self.events is None:
            raise EnvError("event logging was not enabled for this environment")
        w = csv.writer(fh, lineterminator="\n")
        for ev in self.events:
            w.writerow(((trial,) if trial is not None else ()) + ev)

    # -- internals ---------------------------------------------------------

    def _resolve(self, handle: SlotHandle) -> ArmStats:
        slot = handle.slot
        if not 0 <= slot < self.m or self._serials[slot] != handle.serial or handle.serial == 0:
            raise InvalidSlotError(f"stale or unknown slot handle {handle}")
        return self._slots[slot]

    def _log(self, action, arm, reward) -> None:
        if self.events is not None:
            self.events.append(
                (self.trace.rounds, action, arm, reward, repr(self._running_regret))
            )


TRACE_HEADER = ("round", "action", "arm", "reward", "cum_regret")


def new_env(instance: BanditInstance, m: int, T: int, rng: SeededRng, **kw) -> StreamEnv:
    return StreamEnv(instance, m, T, rng, **kw)
