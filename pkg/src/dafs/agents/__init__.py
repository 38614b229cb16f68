"""RL agents adapted to the dual-world split, policy heads, return math."""

from .batch import Batch
from .ddpg import DDPGAgent, polyak_update
from .dqn import DQNAgent
from .heads import BetaHead, CategoricalHead, DeterministicHead, log_softmax
from .ppo import PPOAgent, clipped_surrogate, head_for, minibatch_slices
from .replay import ReplayBuffer
from .returns import (
    compute_returns,
    gae_advantages,
    normalize_advantages,
    simple_advantages,
)

__all__ = [
    "Batch",
    "BetaHead",
    "CategoricalHead",
    "DDPGAgent",
    "DQNAgent",
    "DeterministicHead",
    "PPOAgent",
    "ReplayBuffer",
    "clipped_surrogate",
    "compute_returns",
    "gae_advantages",
    "head_for",
    "log_softmax",
    "minibatch_slices",
    "normalize_advantages",
    "polyak_update",
    "simple_advantages",
]
