"""Closed-form bounds, Bernoulli KL divergence and small statistics helpers.

All logarithms are natural. The regret "shape" functions drop the hidden
absolute constant (set to 1): use them for slopes and ratios only.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .policies import LARGE, PLAIN, SMALL, select_policy


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual_se: float
    points: int


@dataclass(frozen=True)
class BoundReport:
    """``passed`` iff ``empirical <= bound + slack`` (``sense='le'``) or
    ``empirical + slack >= bound`` (``sense='ge'``, used for lower bounds)."""

    name: str
    bound: float
    empirical: float
    slack: float
    sense: str = "le"

    @property
    def passed(self) -> bool:
        if self.sense == "le":
            return self.empirical <= self.bound + self.slack
        return self.empirical + self.slack >= self.bound

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def reports_to_json(reports: Iterable[BoundReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)


@dataclass(frozen=True)
class SampleBound:
    value: float
    degenerate: bool

    def __float__(self):
        return self.value


def kl_bernoulli(x: float, y: float) -> float:
    """d(x, y) = x ln(x/y) + (1-x) ln((1-x)/(1-y)), with 0 ln 0 = 0.

    Returns ``math.inf`` when ``y`` is 0 or 1 and differs from ``x``.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"arguments must lie in [0, 1]; got x={x}, y={y}")
    if x == y:
        return 0.0
    if y == 0.0 or y == 1.0:
        return math.inf
    d = 0.0
    if x > 0.0:
        d += x * math.log(x / y)
    if x < 1.0:
        d += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    # rounding can leave a tiny negative value for x very close to y
    return max(d, 0.0)


def hoeffding_beat_bound(gap: float, L: int) -> float:
    """Upper bound on P(worse arm's L-sample mean >= better arm's)."""
    if gap <= 0 or L < 0:
        raise ValueError("need gap > 0 and L >= 0")
    return math.exp(-L * gap * gap / 2.0)


def bar_sample_lower_bound(k: int, m: int, eps: float, delta: float, beta: float) -> SampleBound:
    """Expected-sample lower bound for retaining an eps-best arm of a head-only
    hard instance with failure probability ``delta``."""
    if not (m < k and 0 < delta < k - m and 0 < beta < 1 and eps > 0):
        raise ValueError(f"invalid arguments k={k}, m={m}, eps={eps}, delta={delta}, beta={beta}")
    spare = k - m - delta
    ratio = spare / ((k - 1) * delta)
    if ratio <= 1.0:
        return SampleBound(0.0, True)
    return SampleBound(beta / 32.0 * spare / eps**2 * math.log(ratio), False)


def _gap_sum(gaps: Iterable[float], alpha: float) -> float:
    return math.fsum(g ** (1.0 - 2.0 * alpha) for g in gaps if g > 0)


def regret_upper_shape(alpha: float, n: int, m: int, T: int, gaps: Sequence[float], regime: str | None = None) -> float:
    regime = regime or select_policy(n, m)
    factor = (2.0 * alpha / math.e) ** (alpha / (alpha + 1.0))
    p = 1.0 / (alpha + 1.0)
    s = _gap_sum(gaps, alpha)
    if regime == LARGE:
        return factor * (n - m) * T**p / n ** (1.0 + p) * s
    if regime == SMALL:
        return factor * T**p / m**p * s
    if regime == PLAIN:
        raise ValueError("no streaming regret shape when m >= n")
    raise ValueError(f"unknown regime {regime!r}")


def lower_bound_f(alpha: float, k: int, m: int) -> float:
    return 2.0 / 16.0 ** (alpha + 1.0) * (k - m + 1) / k ** (1.0 / (alpha + 1.0))


def regret_lower_shape(alpha: float, k: int, m: int, T: int, gaps: Sequence[float]) -> float:
    if m > k + 1:
        raise ValueError(f"need m <= k (or k+1 for the vanishing case); got k={k}, m={m}")
    p = 1.0 / (alpha + 1.0)
    return 16.0 ** (-alpha) * (k - m + 1) * T**p / k ** (1.0 + p) * _gap_sum(gaps, alpha)


def head_length_weight(alpha: float, k: int, m: int) -> float:
    """The k-dependent factor (k-m+1)/k^(1+1/(alpha+1)) of the lower bound."""
    return (k - m + 1) / k ** (1.0 + 1.0 / (alpha + 1.0))


def best_head_length(alpha: float, n: int, m: int) -> int:
    """Grid-search the head length k in [m, n) maximizing the lower bound."""
    if not m < n:
        raise ValueError("need m < n")
    return max(range(m, n), key=lambda k: (head_length_weight(alpha, k, m), -k))


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> ScalingFit:
    pts = list(points)
    if len(pts) < 2:
        raise InsufficientDataError("log-log fit needs at least 2 points")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError("log-log fit needs strictly positive coordinates")
    if np.unique(x).size != x.size:
        raise ValueError("log-log fit needs distinct abscissae")
    lx, ly = np.log(x), np.log(y)
    xm, ym = lx.mean(), ly.mean()
    slope = float(((lx - xm) * (ly - ym)).sum() / ((lx - xm) ** 2).sum())
    intercept = float(ym - slope * xm)
    resid = ly - (intercept + slope * lx)
    rse = float(math.sqrt((resid**2).sum() / (len(pts) - 2))) if len(pts) > 2 else 0.0
    return ScalingFit(slope, intercept, rse, len(pts))


def aggregate_trials(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width ``1.96 s / sqrt(N)``."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise InsufficientDataError("need at least 2 trials to aggregate")
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))
