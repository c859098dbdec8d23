import io

import pytest

from streambandit.core import SeededRng, make_instance
from streambandit.env import (
    BudgetExhausted,
    CapacityError,
    ConfigError,
    EndOfStreamError,
    InvalidSlotError,
    PhaseError,
    RegretTrace,
    StreamEnv,
    new_env,
)


@pytest.fixture
def five():
    return make_instance([0.9, 0.5, 0.4, 0.3, 0.2])


def test_new_env_initial_state(five):
    env = new_env(five, 2, 100, SeededRng(0))
    assert env.occupancy == 0
    assert env.cursor == 1
    assert env.rounds_used == 0
    assert env.trace.regret == 0.0


@pytest.mark.parametrize("m,T", [(0, 100), (2, 0)])
def test_new_env_guards(five, m, T):
    with pytest.raises(ConfigError):
        new_env(five, m, T, SeededRng(0))


def test_read_next_sequencing_and_capacity(five):
    env = new_env(five, 2, 100, SeededRng(0))
    a, b = env.read_next(), env.read_next()
    assert {env.stats(a).arm, env.stats(b).arm} == {1, 2}
    assert env.cursor == 3
    with pytest.raises(CapacityError):
        env.read_next()
    assert env.cursor == 3 and env.occupancy == 2


def test_end_of_stream():
    env = new_env(make_instance([0.5, 0.6]), 5, 10, SeededRng(0))
    env.read_next(), env.read_next()
    with pytest.raises(EndOfStreamError):
        env.read_next()


def test_discard_frees_and_invalidates(five):
    env = new_env(five, 2, 100, SeededRng(0))
    a, _ = env.read_next(), env.read_next()
    env.discard(a)
    c = env.read_next()
    assert env.stats(c).arm == 3
    assert c.slot == a.slot  # lowest free slot reused
    with pytest.raises(InvalidSlotError):
        env.discard(a)
    with pytest.raises(InvalidSlotError):
        env.pull(a)
    assert env.rounds_used == 0


def test_pull_accounting():
    env = new_env(make_instance([0.9, 0.5]), 2, 20, SeededRng(0))
    best, worse = env.read_next(), env.read_next()
    env.pull(best)
    assert env.trace.regret == 0.0
    for _ in range(10):
        env.pull(worse)
    assert env.trace.regret == pytest.approx(4.0)
    assert env.rounds_used == 11
    assert env.stats(worse).pulls == 10


def test_budget_exhausted():
    env = new_env(make_instance([0.9, 0.5]), 2, 3, SeededRng(0))
    h = env.read_next()
    for _ in range(3):
        env.pull(h)
    with pytest.raises(BudgetExhausted):
        env.pull(h)
    assert env.rounds_used == 3


def test_storage_ops_consume_no_round(five):
    env = new_env(five, 3, 10, SeededRng(0))
    hs = [env.read_next() for _ in range(3)]
    env.discard(hs[0])
    env.read_next()
    assert env.rounds_used == 0


def test_marker_at_zero(five):
    env = new_env(five, 2, 10, SeededRng(0))
    env.mark_exploitation_start()
    assert env.trace.phase_split()[:2] == (0, 0.0)


def test_marker_split_and_second_call(five):
    env = new_env(five, 2, 10, SeededRng(0))
    _, h = env.read_next(), env.read_next()
    for _ in range(3):
        env.pull(h)
    env.mark_exploitation_start()
    for _ in range(2):
        env.pull(h)
    L1, R1, L2, R2 = env.trace.phase_split()
    assert (L1, L2) == (3, 2)
    assert R1 == pytest.approx(3 * 0.4)
    assert R1 + R2 == pytest.approx(env.trace.regret, abs=1e-12)
    with pytest.raises(PhaseError):
        env.mark_exploitation_start()


def test_unmarked_trace(five):
    env = new_env(five, 2, 10, SeededRng(0))
    h = env.read_next()
    env.pull(h)
    assert not env.trace.marked
    L1, R1, L2, R2 = env.trace.phase_split()
    assert (L1, L2) == (1, 0)


def test_regret_matches_weighted_counts():
    inst = make_instance([0.3, 0.8, 0.55, 0.1])
    env = new_env(inst, 4, 400, SeededRng(2))
    hs = [env.read_next() for _ in range(4)]
    for t in range(400):
        env.pull(hs[(t * 7) % 4])
        assert env.trace.regret == RegretTrace.weighted(env.trace.gaps, env.trace.pulls)
    assert sum(env.trace.pulls) == env.rounds_used


def test_slot_handles_hide_means(five):
    env = new_env(five, 2, 10, SeededRng(0))
    h = env.read_next()
    assert set(vars(env.stats(h))) == {"arm", "pulls", "reward_sum"}
    with pytest.raises(ValueError):
        env.stats(h).mean


def test_trace_csv_export():
    env = StreamEnv(make_instance([0.9, 0.5]), 2, 3, SeededRng(0), log_events=True)
    a, b = env.read_next(), env.read_next()
    env.mark_exploitation_start()
    env.pull(b)
    env.pull(b)
    env.discard(a)
    buf = io.StringIO()
    env.write_trace_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "0,read,1,,0.0"
    assert lines[3].startswith("1,pull,2,")
    assert lines[4].endswith(",0.8")
    assert lines[-1] == "2,discard,1,,0.8"
