import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streambandit.core import SeededRng, make_instance
from streambandit.policies import PolicyConfig, select_policy
from streambandit.simulate import BACKEND, simulate_trial

compiled = pytest.mark.skipif(BACKEND != "compiled", reason="compiled kernel not built")


def _both(means, m, T, seed, alpha=1.0, delta=None):
    inst = make_instance(means)
    tag = select_policy(inst.n, m)
    cfg = PolicyConfig(alpha=alpha, delta=delta)
    a = simulate_trial(inst, m, T, tag, cfg, SeededRng(seed), backend="compiled")
    b = simulate_trial(inst, m, T, tag, cfg, SeededRng(seed), backend="python")
    return a, b


@compiled
@settings(max_examples=150, deadline=None)
@given(
    st.integers(2, 30).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0, 1), min_size=n, max_size=n),
            st.integers(2, n + 2),
        )
    ),
    st.integers(1, 4000),
    st.integers(0, 2**63 - 1),
    st.floats(1, 3),
)
def test_backends_identical(inst_m, T, seed, alpha):
    means, m = inst_m
    a, b = _both(means, m, T, seed, alpha)
    assert a == b


@compiled
@pytest.mark.parametrize("n,m", [(50, 10), (60, 50), (9, 6), (5, 5)])
def test_backends_identical_long(n, m):
    means = np.random.default_rng(n).uniform(0.2, 0.8, n)
    a, b = _both(means, m, 60_000, seed=123, delta=0.01)
    assert a == b
    assert not a.truncated


def test_unknown_backend():
    with pytest.raises(ValueError):
        simulate_trial(make_instance([0.5, 0.6]), 2, 10, "plain-ucb", PolicyConfig(), SeededRng(0), backend="gpu")


def test_env_var_forces_fallback():
    env = dict(os.environ, STREAMBANDIT_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import streambandit.simulate as s; print(s.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
