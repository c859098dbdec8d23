"""Single-pass streaming stochastic multi-armed bandits under an m-slot memory."""
from .core import BanditInstance, GapVector, SeededRng, gap_vector, make_instance, sample_reward
from .env import ArmStats, RegretTrace, SlotHandle, StreamEnv, new_env
from .policies import (
    PolicyConfig,
    exploration_length_large,
    exploration_length_small,
    run_alg_large,
    run_alg_small,
    run_ucb,
    select_policy,
    ucb_index,
)
from .simulate import BACKEND, TrialSummary, simulate_trial

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ArmStats", "BanditInstance", "GapVector", "PolicyConfig", "RegretTrace",
    "SeededRng", "SlotHandle", "StreamEnv", "TrialSummary", "exploration_length_large",
    "exploration_length_small", "gap_vector", "make_instance", "new_env", "run_alg_large",
    "run_alg_small", "run_ucb", "sample_reward", "select_policy", "simulate_trial", "ucb_index",
]
