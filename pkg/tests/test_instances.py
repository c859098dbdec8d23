import pytest
from hypothesis import given, strategies as st

from streambandit.core import InstanceError, gap_vector
from streambandit.instances import (
    HardFamilySpec,
    epsilon,
    family_I,
    family_I0,
    family_Iprime,
    hard_instance,
    validate_bar_preconditions,
)


def test_epsilon_examples():
    assert epsilon(16, 160000, 1) == pytest.approx(0.025, rel=1e-12)
    assert epsilon(16, 10**8, 1) == pytest.approx(0.005, rel=1e-12)
    assert epsilon(7, 7, 2.5) == 0.25


def test_family_I_examples():
    assert family_I(4, 3, 1, 0.05).means == pytest.approx((0.7, 0.65, 0.65, 0.5))
    assert family_I(4, 3, 2, 0.05).means == pytest.approx((0.7, 0.75, 0.65, 0.5))
    with pytest.raises(InstanceError):
        family_I(4, 3, 1, 0.2)


def test_family_Iprime_examples():
    assert family_Iprime(4, 3, 1, 0.05).means == pytest.approx((0.7, 0.65, 0.65, 1.0))
    # arm 1 sits at 1/2 + n*eps, so n=5 shifts the whole head up by eps
    inst = family_Iprime(5, 3, 2, 0.05)
    assert inst.means == pytest.approx((0.75, 0.8, 0.7, 1.0, 1.0))
    assert not inst.unique_best
    assert family_Iprime(4, 3, 1, 0.05).unique_best


def test_family_I0_examples():
    assert family_I0(4, 3, 1, 0.05).means == pytest.approx((0.7, 0.65, 0.65))
    assert family_I0(4, 3, 3, 0.05).means == pytest.approx((0.7, 0.65, 0.75))


@st.composite
def hard_params(draw):
    n = draw(st.integers(2, 40))
    k = draw(st.integers(1, n - 1))
    i = draw(st.integers(1, k))
    eps = draw(st.floats(1e-6, 0.5 / (n + 1)))
    return n, k, i, eps


@given(hard_params())
def test_shared_head_and_range(params):
    n, k, i, eps = params
    a, b, c = family_I(*params), family_Iprime(*params), family_I0(*params)
    assert a.means[:k] == b.means[:k] == c.means
    for inst in (a, b, c):
        assert all(0.0 <= mu <= 1.0 for mu in inst.means)


@given(hard_params())
def test_gap_structure(params):
    n, k, i, eps = params
    g = gap_vector(family_I(*params)).gaps
    if i >= 2:
        assert g[i - 1] == 0.0
        assert g[0] == pytest.approx(eps, abs=1e-12)
        for j in range(1, k):
            if j != i - 1:
                assert g[j] == pytest.approx(2 * eps, abs=1e-12)
        tail = (n + 1) * eps
    else:
        assert g[0] == 0.0
        assert all(x == pytest.approx(eps, abs=1e-12) for x in g[1:k])
        tail = n * eps
    assert all(x == pytest.approx(tail, abs=1e-12) for x in g[k:])


def test_Iprime_gaps_against_max_one():
    g = gap_vector(family_Iprime(5, 3, 2, 0.05)).gaps
    assert g == pytest.approx((0.25, 0.2, 0.3, 0.0, 0.0))


def test_family_spec_derives_eps():
    spec = HardFamilySpec(n=20, k=16, alpha=1.0, T=10**8, variant="I0")
    assert spec.resolved_eps == pytest.approx(0.005)
    assert spec.build().n == 16
    with pytest.raises(ValueError):
        hard_instance("J", 4, 3, 1, 0.05)


def test_bar_preconditions():
    assert validate_bar_preconditions(20, 16, 8, 0.005, 0.1, 0.5).eps_ok
    assert not validate_bar_preconditions(20, 16, 8, 0.025, 0.1, 0.5).eps_ok
    rep = validate_bar_preconditions(20, 16, 8, 0.005, 0.25, 0.5)
    assert rep.delta_max == 0.25 and rep.delta_ok and rep.ok
    assert not validate_bar_preconditions(20, 16, 8, 0.005, 0.26, 0.5).ok
