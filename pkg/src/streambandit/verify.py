"""Property and Monte Carlo verification suites.

Each suite returns a list of :class:`BoundReport`; a suite passes when every
report passes. Suites are deterministic given their seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import BoundReport, bar_sample_lower_bound, hoeffding_beat_bound, kl_bernoulli
from .core import SeededRng, make_instance
from .env import EnvError, RegretTrace, StreamEnv
from .instances import family_I0, validate_bar_preconditions
from .policies import (
    LARGE,
    PLAIN,
    SMALL,
    PolicyConfig,
    duel_retention,
    exploration_length_large,
    exploration_length_small,
    run_policy,
    select_policy,
)
from .simulate import BACKEND, simulate_trial, summarize_env

TOL = 1e-12
SUITES = ("kl", "hoeffding", "ucb-bound", "single-pass", "bar-bound")


def _count(name: str, violations: int) -> BoundReport:
    return BoundReport(name, bound=0.0, empirical=float(violations), slack=0.0)


# -- KL divergence properties -----------------------------------------------


def kl_suite(seed: int = 0, samples: int = 10_000) -> list[BoundReport]:
    rng = SeededRng(seed).child(1).generator
    d = kl_bernoulli
    reports = []

    grid = np.round(np.linspace(0.0, 1.0, 101), 12)
    bad = 0
    for x in grid:
        for y in grid[1:-1]:
            v = d(x, y)
            if v < 0 or (v == 0) != (x == y):
                bad += 1
    reports.append(_count("kl-nonnegative", bad))

    # d(mu, mu + z) <= 4 z^2 on mu in [1/2, 5/8], z in (0, 1/8], step 1e-3
    worst, bad = -math.inf, 0
    for i in range(126):
        mu = 0.5 + i * 1e-3
        for j in range(1, 126):
            z = j * 1e-3
            gap = d(mu, mu + z) - 4 * z * z
            worst = max(worst, gap)
            bad += gap > TOL
    reports.append(_count("kl-quadratic-upper", bad))

    lo = 1e-6
    bad = 0
    for x1, x2, y in rng.uniform(lo, 1 - lo, size=(samples, 3)):
        if d((x1 + x2) / 2, y) > (d(x1, y) + d(x2, y)) / 2 + TOL:
            bad += 1
        if d(y, (x1 + x2) / 2) > (d(y, x1) + d(y, x2)) / 2 + TOL:
            bad += 1
    reports.append(_count("kl-midpoint-convex", bad))

    bad = 0
    for row in rng.uniform(0.0, 1.0, size=(samples, 4)):
        p, x, y, q = np.clip(np.sort(row), lo, 1 - lo)
        if d(p, q) < d(x, y) - TOL:
            bad += 1
    reports.append(_count("kl-monotone-outward", bad))

    bad = 0
    for _ in range(samples):
        xs = rng.uniform(0.0, 1.0, size=int(rng.integers(1, 21)))
        a = xs.mean()
        b = rng.uniform(a, 1 - lo)
        if not a < b:
            continue
        lhs = math.fsum(d(float(v), b) for v in xs if v < b)
        if lhs < len(xs) * d(a, b) - TOL:
            bad += 1
    reports.append(_count("kl-jensen-sum", bad))

    bad = 0
    for u, v in rng.uniform(lo, 1 - lo, size=(samples, 2)):
        q, p = min(u, v), max(u, v)
        if not q < p:
            continue
        r = (p - q) / q
        if d(p, q) < r / (2 + 2 * r) * p * math.log(p / q) - TOL:
            bad += 1
    reports.append(_count("kl-first-term", bad))
    return reports


# -- Hoeffding duel bound ---------------------------------------------------


def hoeffding_suite(
    seed: int = 0,
    gaps=(0.05, 0.1, 0.2),
    lengths=(50, 100, 200),
    duels: int = 10_000,
) -> list[BoundReport]:
    """Frequency that the worse arm's L-sample mean is >= the better arm's."""
    rng = SeededRng(seed).child(2).generator
    reports = []
    for gap in gaps:
        worse, better = 0.5 - gap / 2, 0.5 + gap / 2
        for L in lengths:
            sw = rng.binomial(L, worse, size=duels)
            sb = rng.binomial(L, better, size=duels)
            p = float((sw >= sb).mean())
            se = math.sqrt(p * (1 - p) / duels)
            reports.append(
                BoundReport(f"hoeffding gap={gap} L={L}", hoeffding_beat_bound(gap, L), p, 3 * se)
            )
    return reports


# -- UCB pull-count bound ---------------------------------------------------


def ucb_bound_suite(seed: int = 0, T: int = 100_000, trials: int = 200, backend=None) -> list[BoundReport]:
    inst = make_instance([0.6, 0.4])
    gap = 0.2
    cfg = PolicyConfig()
    master = SeededRng(seed)
    pulls = [
        simulate_trial(inst, 2, T, PLAIN, cfg, master.child(t), backend=backend).pulls[1]
        for t in range(trials)
    ]
    bound = 8 * math.log(T) / gap**2
    return [BoundReport("ucb pulls of the 0.4 arm", bound, float(np.mean(pulls)), 0.0)]


# -- structural audits -----------------------------------------------------


class AuditError(AssertionError):
    pass


class AuditedEnv(StreamEnv):
    """A StreamEnv that re-checks the streaming invariants after every call."""

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        self.audit_pulls = [0] * self.n
        self.max_occupancy = 0

    def _check(self):
        occ = self.occupancy
        self.max_occupancy = max(self.max_occupancy, occ)
        if occ > self.m:
            raise AuditError(f"{occ} arms stored with m={self.m}")
        if len(set(self.reads)) != len(self.reads) or self.reads != sorted(self.reads):
            raise AuditError("an arm was read twice or out of order")
        if self.rounds_used > self.T:
            raise AuditError("rounds exceed horizon")
        if sum(self.audit_pulls) != self.rounds_used:
            raise AuditError("rounds used differ from the number of pulls")
        if self.trace.pulls != self.audit_pulls:
            raise AuditError("per-arm pull counts disagree with the pull log")
        expected = RegretTrace.weighted(self.trace.gaps, self.audit_pulls)
        if self.trace.regret != expected:
            raise AuditError("pseudo-regret differs from sum of gap * pulls")

    def read_next(self):
        rounds = self.rounds_used
        h = super().read_next()
        if self.rounds_used != rounds:
            raise AuditError("read consumed a round")
        self._check()
        return h

    def discard(self, handle):
        rounds = self.rounds_used
        super().discard(handle)
        if self.rounds_used != rounds:
            raise AuditError("discard consumed a round")
        self._check()

    def pull(self, handle):
        rounds = self.rounds_used
        arm = self.stats(handle).arm
        r = super().pull(handle)
        if self.rounds_used != rounds + 1:
            raise AuditError("pull did not consume exactly one round")
        self.audit_pulls[arm - 1] += 1
        self._check()
        return r


@dataclass
class AuditOutcome:
    tag: str
    n: int
    m: int
    T: int
    L1: int
    expected_L1: int | None
    truncated: bool
    error: str | None
    backends_agree: bool | None


def random_config(rng: np.random.Generator):
    n = int(rng.integers(2, 25))
    m = int(rng.integers(2, n + 3))
    T = int(rng.integers(1, 1500))
    means = np.round(rng.uniform(0.0, 1.0, size=n), 6)
    return n, m, T, means


def audit_config(n, m, T, means, seed, alpha=1.0, compare_backend=True) -> AuditOutcome:
    inst = make_instance(means)
    tag = select_policy(n, m)
    cfg = PolicyConfig(alpha=alpha)
    env = AuditedEnv(inst, m, T, SeededRng(seed))
    error = None
    try:
        run_policy(env, tag, cfg)
        if env.remaining != 0:
            raise AuditError(f"policy stopped with {env.remaining} rounds left")
    except (AuditError, EnvError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    tr = env.trace
    if tag == LARGE:
        expected = 2 * (n - m) * exploration_length_large(alpha, T, n)
    elif tag == SMALL:
        expected = n * exploration_length_small(alpha, T, m)
    else:
        expected = 0
    L1 = tr.phase_split()[0]
    agree = None
    if compare_backend and BACKEND == "compiled":
        ref = summarize_env(env)
        agree = simulate_trial(inst, m, T, tag, cfg, SeededRng(seed), backend="compiled") == ref
    return AuditOutcome(tag, n, m, T, L1, expected, not tr.marked, error, agree)


def single_pass_outcomes(seed: int = 0, configs: int = 1000) -> list[AuditOutcome]:
    rng = SeededRng(seed).child(3).generator
    outcomes = []
    for _ in range(configs):
        n, m, T, means = random_config(rng)
        outcomes.append(audit_config(n, m, T, means, seed=int(rng.integers(2**63))))
    return outcomes


def single_pass_suite(seed: int = 0, configs: int = 1000, outcomes=None) -> list[BoundReport]:
    if outcomes is None:
        outcomes = single_pass_outcomes(seed, configs)
    errors = sum(o.error is not None for o in outcomes)
    # exploration length checks apply only when the horizon covered exploration
    length_bad = sum(
        not o.truncated and o.tag != PLAIN and o.L1 != o.expected_L1 for o in outcomes
    )
    truncation_bad = sum(o.truncated and o.L1 != o.T for o in outcomes)
    reports = [
        _count("audit invariant violations", errors),
        _count("exploration length mismatches", length_bad),
        _count("truncated trials not using full horizon", truncation_bad),
    ]
    agree = [o.backends_agree for o in outcomes if o.backends_agree is not None]
    if agree:
        reports.append(_count("compiled/python summary mismatches", agree.count(False)))
    return reports


# -- best-arm-retention sample bound -----------------------------------------


def bar_suite(
    seed: int = 0,
    n: int = 17,
    k: int = 16,
    m: int = 12,
    L: int = 12_000,
    trials: int = 2000,
    beta: float = 0.5,
) -> list[BoundReport]:
    """Duel-stage retention on the head-only instance with arm 1 best."""
    eps = 1.0 / (8.0 * (n - 1))
    inst = family_I0(n, k, 1, eps)
    rng = SeededRng(seed).child(4).generator
    retained, samples = duel_retention(inst.means, m, L, trials, rng)
    delta_hat = float(1.0 - retained.mean())
    mean_samples = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(trials))
    reports = []
    pre = validate_bar_preconditions(n, k, m, eps, delta_hat, beta)
    reports.append(_count("retention preconditions unmet", int(not pre.ok)))
    reports.append(_count("no retention failures observed", int(delta_hat == 0.0)))
    if pre.ok and delta_hat > 0:
        for kept in (m, m - 1):
            bound = bar_sample_lower_bound(k, kept, eps, delta_hat, beta)
            reports.append(
                BoundReport(f"mean samples vs bound (k={k}, m={kept})", bound.value,
                            mean_samples, 3 * se, sense="ge")
            )
    return reports


def run_suite(name: str, seed: int = 0) -> list[BoundReport]:
    runners = {
        "kl": kl_suite,
        "hoeffding": hoeffding_suite,
        "ucb-bound": ucb_bound_suite,
        "single-pass": single_pass_suite,
        "bar-bound": bar_suite,
    }
    try:
        fn = runners[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}") from None
    return fn(seed=seed)
