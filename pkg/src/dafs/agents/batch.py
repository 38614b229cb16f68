"""Flat trajectory batch shared by the on-policy agents."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class Batch:
    """Concatenated rollout segments.

    `dones` marks the last step of each segment (termination or cut);
    `terminated` marks only true environment termination — the difference
    decides where bootstrapping applies.  `returns` and `advantages` start
    empty and are filled by the agent's preparation step.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminated: np.ndarray
    dones: np.ndarray
    next_states: np.ndarray
    log_probs_old: np.ndarray
    returns: Optional[np.ndarray] = field(default=None)
    advantages: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        n = len(self.rewards)
        for name in ("states", "actions", "terminated", "dones", "next_states", "log_probs_old"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"batch field {name} has length {len(arr)}, expected {n}")

    def __len__(self):
        return len(self.rewards)
