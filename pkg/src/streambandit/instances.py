"""Lower-bound instance families and instance sources for experiments.

``family_I(n, k, i, eps)`` puts the head of ``k`` candidate arms first and an
``n - k`` arm tail of mean 1/2 last; ``family_Iprime`` is the same head with a
tail of mean 1; ``family_I0`` is the head alone. Means keep their dependence
on ``n`` even in the ``k``-arm head-only family.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BanditInstance, InstanceError, make_instance

FAMILIES = ("I", "Iprime", "I0")
_TOL = 1e-12


def epsilon(k: int, T: int, alpha: float) -> float:
    if not (1 <= k <= T) or alpha < 1:
        raise ValueError(f"need 1 <= k <= T and alpha >= 1; got k={k}, T={T}, alpha={alpha}")
    return 0.25 * (k / T) ** (1.0 / (2.0 + 2.0 * alpha))


def _head(n: int, k: int, i: int, eps: float) -> list[float]:
    if not 1 <= i <= k < n:
        raise InstanceError(f"need 1 <= i <= k < n; got n={n}, k={k}, i={i}")
    if eps <= 0:
        raise InstanceError(f"eps must be positive, got {eps}")
    if (n + 1) * eps > 0.5 + _TOL:
        raise InstanceError(
            f"eps={eps} too large for n={n}: (n+1)*eps={(n + 1) * eps} exceeds 1/2"
        )
    head = [0.5 + (n - 1) * eps] * k
    head[0] = 0.5 + n * eps
    if i >= 2:
        head[i - 1] = 0.5 + (n + 1) * eps
    return head


def family_I(n: int, k: int, i: int, eps: float) -> BanditInstance:
    return make_instance(_head(n, k, i, eps) + [0.5] * (n - k))


def family_Iprime(n: int, k: int, i: int, eps: float) -> BanditInstance:
    return make_instance(_head(n, k, i, eps) + [1.0] * (n - k))


def family_I0(n: int, k: int, i: int, eps: float) -> BanditInstance:
    return make_instance(_head(n, k, i, eps))


_BUILDERS = {"I": family_I, "Iprime": family_Iprime, "I0": family_I0}


def hard_instance(variant: str, n: int, k: int, i: int, eps: float) -> BanditInstance:
    try:
        return _BUILDERS[variant](n, k, i, eps)
    except KeyError:
        raise ValueError(f"unknown family {variant!r}; expected one of {FAMILIES}") from None


@dataclass(frozen=True)
class HardFamilySpec:
    n: int
    k: int
    alpha: float
    T: int
    variant: str = "I"
    i: int = 1
    eps: float | None = None

    @property
    def resolved_eps(self) -> float:
        return self.eps if self.eps is not None else epsilon(self.k, self.T, self.alpha)

    def build(self) -> BanditInstance:
        return hard_instance(self.variant, self.n, self.k, self.i, self.resolved_eps)


@dataclass(frozen=True)
class BarPreconditionReport:
    eps_ok: bool
    delta_ok: bool
    eps_max: float
    delta_max: float

    @property
    def ok(self) -> bool:
        return self.eps_ok and self.delta_ok


def validate_bar_preconditions(n, k, m, eps, delta, beta) -> BarPreconditionReport:
    """Check the two hypotheses of the retention sample-complexity bound."""
    eps_max = 1.0 / (8.0 * (n - 1))
    delta_max = (k - m) / k * (1.0 - beta)
    return BarPreconditionReport(
        eps_ok=eps <= eps_max,
        delta_ok=delta <= delta_max,
        eps_max=eps_max,
        delta_max=delta_max,
    )


def uniform_gap_instance(
    n: int, low: float, high: float, best_mean: float, rng: np.random.Generator
) -> BanditInstance:
    """One best arm at ``best_mean`` in a random stream position; the other
    ``n - 1`` arms sit ``U[low, high]`` below it."""
    gaps = rng.uniform(low, high, size=n - 1)
    pos = int(rng.integers(0, n))
    means = list(best_mean - gaps)
    means.insert(pos, best_mean)
    return make_instance(means)


def permuted(instance: BanditInstance, rng: np.random.Generator) -> BanditInstance:
    order = rng.permutation(instance.n)
    return make_instance([instance.means[j] for j in order])
