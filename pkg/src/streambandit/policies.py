"""UCB(delta), the two single-pass streaming policies, and the regime dispatcher.

Every random choice a policy makes is drawn from the environment's trial
generator, in a fixed order, so that the compiled kernel can replay a trial
draw for draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import ArmStats, SlotHandle, StreamEnv

LARGE = "large"
SMALL = "small"
PLAIN = "plain-ucb"
POLICY_TAGS = (LARGE, SMALL, PLAIN)


class RegimeError(ValueError):
    """The (n, m) pair is outside the regime a policy was designed for."""


class UnsupportedMemoryError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    alpha: float = 1.0
    delta: float | None = None
    tie_rule: str = "lowest-slot"
    allow_truncation: bool = True

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.tie_rule != "lowest-slot":
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")

    def resolved_delta(self, T: int) -> float:
        # 1/T^2 by default; T=1 would give delta=1, so floor T at 2
        if self.delta is not None:
            return self.delta
        return 1.0 / max(T, 2) ** 2

    def ucb_width(self, T: int) -> float:
        """The constant ``2 log(1/delta)`` under the square root of the index."""
        return 2.0 * math.log(1.0 / self.resolved_delta(T))


def large_threshold(n: int) -> int:
    """Smallest m counted as 'large memory': ceil(2n/3)."""
    return (2 * n + 2) // 3


def select_policy(n: int, m: int) -> str:
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 2:
        raise UnsupportedMemoryError(f"memory size m={m} unsupported; need m >= 2")
    if m >= n:
        return PLAIN
    if m >= large_threshold(n):
        return LARGE
    return SMALL


def _length_factor(alpha: float) -> float:
    return (2.0 * alpha / math.e) ** (alpha / (alpha + 1.0))


def exploration_length_raw(alpha: float, T: int, size: int) -> float:
    return _length_factor(alpha) * (T / size) ** (1.0 / (alpha + 1.0))


def exploration_length_large(alpha: float, T: int, n: int) -> int:
    if alpha < 1 or T < 1 or n < 1:
        raise ValueError("need alpha >= 1, T >= 1, n >= 1")
    return max(1, math.ceil(exploration_length_raw(alpha, T, n)))


def exploration_length_small(alpha: float, T: int, m: int) -> int:
    if alpha < 1 or T < 1 or m < 2:
        raise ValueError("need alpha >= 1, T >= 1, m >= 2")
    return max(1, math.ceil(exploration_length_raw(alpha, T, m)))


def ucb_index(stats: ArmStats, delta: float) -> float:
    if stats.pulls == 0:
        return math.inf
    return stats.reward_sum / stats.pulls + math.sqrt(2.0 * math.log(1.0 / delta) / stats.pulls)


def _ucb_loop(env: StreamEnv, handles: list[SlotHandle], width: float) -> None:
    hs = sorted(handles, key=lambda h: h.slot)
    st = [env.stats(h) for h in hs]
    idx = [math.inf if s.pulls == 0 else s.reward_sum / s.pulls + math.sqrt(width / s.pulls) for s in st]

    def argmax_except(skip):
        # positions follow slot order, so strict '>' keeps the lowest slot on ties
        best, val = -1, -math.inf
        for p, v in enumerate(idx):
            if p != skip and (best < 0 or v > val):
                best, val = p, v
        return best

    top = argmax_except(-1)
    runner = argmax_except(top)
    sqrt = math.sqrt
    pull = env.pull
    while env.remaining > 0:
        pull(hs[top])
        s = st[top]
        v = idx[top] = s.reward_sum / s.pulls + sqrt(width / s.pulls)
        # only the pulled arm's index moves, so the runner-up is still valid
        if runner >= 0:
            rv = idx[runner]
            if rv > v or (rv == v and runner < top):
                top = runner
                runner = argmax_except(top)


def run_ucb(env: StreamEnv, slots: list[SlotHandle], delta: float) -> None:
    """Pull the max-index arm among ``slots`` until the horizon is spent."""
    if not slots:
        raise ValueError("run_ucb needs at least one stored arm")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    _ucb_loop(env, list(slots), 2.0 * math.log(1.0 / delta))


def _pull_times(env: StreamEnv, h: SlotHandle, times: int) -> bool:
    """Pull ``h`` up to ``times`` times; False if the budget ran out first."""
    for _ in range(times):
        if env.remaining == 0:
            return False
        env.pull(h)
    return True


def _less(a: ArmStats, b: ArmStats) -> bool:
    """Empirical mean of ``a`` strictly below that of ``b`` (exact integer test)."""
    return a.reward_sum * b.pulls < b.reward_sum * a.pulls


def check_large_regime(n: int, m: int) -> None:
    if not (large_threshold(n) <= m <= n - 1 and m >= 2 * (n - m)):
        raise RegimeError(
            f"large-memory policy needs ceil(2n/3) <= m <= n-1; got n={n}, m={m}"
        )


def check_small_regime(n: int, m: int) -> None:
    if not (2 <= m < large_threshold(n) and n > m):
        raise RegimeError(
            f"small-memory policy needs 2 <= m < ceil(2n/3); got n={n}, m={m}"
        )


def run_alg_large(env: StreamEnv, cfg: PolicyConfig) -> None:
    """Pairwise duels among 2(n-m) stored arms, refill, then UCB on all m."""
    n, m, T = env.n, env.m, env.T
    check_large_regime(n, m)
    L = exploration_length_large(cfg.alpha, T, n)
    c = n - m
    rng = env.rng
    held = [env.read_next() for _ in range(m)]
    pool = list(range(m))
    for j in range(2 * c):
        r = j + rng.below(m - j)
        pool[j], pool[r] = pool[r], pool[j]
    for i in range(c):
        first, second = held[pool[2 * i]], held[pool[2 * i + 1]]
        if not (_pull_times(env, first, L) and _pull_times(env, second, L)):
            return
        # ties evict the second arm of the pair
        loser = first if _less(env.stats(first), env.stats(second)) else second
        env.discard(loser)
    for _ in range(c):
        env.read_next()
    env.mark_exploitation_start()
    _ucb_loop(env, env.handles(), cfg.ucb_width(T))


def run_alg_small(env: StreamEnv, cfg: PolicyConfig) -> None:
    """Challenger-vs-random-incumbent retention, then UCB on the m-1 survivors."""
    n, m, T = env.n, env.m, env.T
    check_small_regime(n, m)
    L = exploration_length_small(cfg.alpha, T, m)
    rng = env.rng
    stored = [env.read_next() for _ in range(m - 1)]
    for h in stored:
        if not _pull_times(env, h, L):
            return
    while not env.stream_exhausted:
        j = rng.below(m - 1)
        incumbent = stored[j]
        challenger = env.read_next()
        if not _pull_times(env, challenger, L):
            return
        if _less(env.stats(incumbent), env.stats(challenger)):
            env.discard(incumbent)
            stored[j] = challenger
        else:
            env.discard(challenger)
    env.mark_exploitation_start()
    _ucb_loop(env, stored, cfg.ucb_width(T))


def run_plain_ucb(env: StreamEnv, cfg: PolicyConfig) -> None:
    if env.m < env.n:
        raise RegimeError("plain UCB needs the whole stream to fit in memory (m >= n)")
    handles = [env.read_next() for _ in range(env.n)]
    env.mark_exploitation_start()
    _ucb_loop(env, handles, cfg.ucb_width(env.T))


RUNNERS = {LARGE: run_alg_large, SMALL: run_alg_small, PLAIN: run_plain_ucb}


def run_policy(env: StreamEnv, tag: str, cfg: PolicyConfig) -> None:
    try:
        runner = RUNNERS[tag]
    except KeyError:
        raise ValueError(f"unknown policy {tag!r}; expected one of {POLICY_TAGS}") from None
    runner(env, cfg)


def duel_retention(
    means, m: int, L: int, trials: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Run the large-memory duel stage alone as a best-arm-retention procedure.

    Reads the first ``m`` of ``k = len(means)`` arms, duels ``2(k-m)`` of them
    with ``L`` pulls each (ties evict the second), and keeps the survivors plus
    the unread tail. Returns per-trial ``(best arm retained, samples used)``;
    the best arm is the first index attaining the maximum mean.
    """
    mu = np.asarray(means, dtype=float)
    k = mu.size
    c = k - m
    if c < 1 or m < 2 * c:
        raise RegimeError(f"duel retention needs 1 <= k-m and m >= 2(k-m); got k={k}, m={m}")
    best = int(np.argmax(mu))
    picks = np.argsort(rng.random((trials, m)), axis=1)[:, : 2 * c]
    sums = rng.binomial(L, mu[picks])
    first, second = sums[:, 0::2], sums[:, 1::2]
    loser = np.where(first < second, picks[:, 0::2], picks[:, 1::2])
    retained = ~(loser == best).any(axis=1)
    samples = np.full(trials, 2 * c * L, dtype=np.int64)
    return retained, samples
