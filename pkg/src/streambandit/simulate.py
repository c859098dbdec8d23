"""One-trial simulation on either backend.

The compiled kernel (``_kernel``) is used when it imports; otherwise, or when
``STREAMBANDIT_BACKEND=python`` is set, trials run through :class:`StreamEnv`
and the policy functions directly. Both consume the trial generator in the
same order and produce identical summaries.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import BanditInstance, SeededRng, gap_vector
from .env import RegretTrace, StreamEnv
from .policies import (
    LARGE,
    PLAIN,
    SMALL,
    PolicyConfig,
    RegimeError,
    check_large_regime,
    check_small_regime,
    exploration_length_large,
    exploration_length_small,
    run_policy,
)

if os.environ.get("STREAMBANDIT_BACKEND", "").lower() == "python":
    _kernel = None
else:
    try:
        from . import _kernel
    except ImportError:
        _kernel = None

BACKEND = "compiled" if _kernel is not None else "python"
_POLICY_CODES = {PLAIN: 0, LARGE: 1, SMALL: 2}


@dataclass(frozen=True)
class TrialSummary:
    regret: float
    realized_regret: float
    L1: int
    R1: float
    L2: int
    R2: float
    best_retained: bool
    truncated: bool
    pulls: tuple[int, ...]


def summarize(instance: BanditInstance, pulls, pulls_at_marker, marker, reward_total, memory) -> TrialSummary:
    trace = RegretTrace(
        gaps=gap_vector(instance).gaps,
        best_mean=instance.best_mean,
        pulls=[int(p) for p in pulls],
        rounds=int(sum(int(p) for p in pulls)),
        reward_total=int(reward_total),
        marker=None if marker is None or marker < 0 else int(marker),
        pulls_at_marker=None if pulls_at_marker is None else [int(p) for p in pulls_at_marker],
    )
    L1, R1, L2, R2 = trace.phase_split()
    top = instance.best_mean
    retained = memory is not None and any(instance.means[a - 1] == top for a in memory)
    return TrialSummary(
        regret=trace.regret,
        realized_regret=trace.realized_regret,
        L1=L1,
        R1=R1,
        L2=L2,
        R2=R2,
        best_retained=retained,
        truncated=not trace.marked,
        pulls=tuple(trace.pulls),
    )


def summarize_env(env: StreamEnv) -> TrialSummary:
    tr = env.trace
    return summarize(
        env._instance,
        tr.pulls,
        tr.pulls_at_marker,
        tr.marker if tr.marked else -1,
        tr.reward_total,
        env.memory_at_marker,
    )


def _exploration_length(tag: str, instance: BanditInstance, m: int, T: int, cfg: PolicyConfig) -> int:
    n = instance.n
    if tag == LARGE:
        check_large_regime(n, m)
        return exploration_length_large(cfg.alpha, T, n)
    if tag == SMALL:
        check_small_regime(n, m)
        return exploration_length_small(cfg.alpha, T, m)
    if m < n:
        raise RegimeError("plain UCB needs the whole stream to fit in memory (m >= n)")
    return 0


def simulate_env(instance, m, T, tag, cfg, rng: SeededRng, log_events=False) -> StreamEnv:
    """Run one trial through the reference environment and return it."""
    env = StreamEnv(instance, m, T, rng, log_events=log_events)
    run_policy(env, tag, cfg)
    return env


def simulate_trial(
    instance: BanditInstance,
    m: int,
    T: int,
    tag: str,
    cfg: PolicyConfig,
    rng: SeededRng,
    backend: str | None = None,
) -> TrialSummary:
    backend = backend or BACKEND
    if backend == "compiled":
        if _kernel is None:
            raise RuntimeError("compiled kernel is not available in this build")
        if tag not in _POLICY_CODES:
            raise ValueError(f"unknown policy {tag!r}")
        L = _exploration_length(tag, instance, m, T, cfg)
        if m < 1 or T < 1:
            raise ValueError("need m >= 1 and T >= 1")
        means = np.ascontiguousarray(instance.means, dtype=np.float64)
        out = _kernel.simulate(means, m, T, _POLICY_CODES[tag], L, cfg.ucb_width(T), rng.bit_generator)
        return summarize(instance, *out)
    if backend != "python":
        raise ValueError(f"unknown backend {backend!r}")
    return summarize_env(simulate_env(instance, m, T, tag, cfg, rng))
