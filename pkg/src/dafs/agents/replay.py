"""Circular experience replay for the off-policy agents.

Stores only true terminations: a transition cut by the episode step limit
keeps terminated=False so TD targets still bootstrap through it.
"""

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity, state_dim, action_dim=None):
        """action_dim None stores integer actions (discrete); an int stores
        float vectors of that length."""
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim))
        self.next_states = np.zeros((capacity, state_dim))
        if action_dim is None:
            self.actions = np.zeros(capacity, dtype=np.int64)
        else:
            self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.terminated = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, state, action, reward, next_state, terminated):
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminated[i] = terminated
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size, rng):
        if self._size == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        if batch_size > self._size:
            raise ValueError(
                f"batch size {batch_size} exceeds buffer occupancy {self._size}"
            )
        idx = rng.integers(0, self._size, size=batch_size)
        return {
            "states": self.states[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_states": self.next_states[idx],
            "terminated": self.terminated[idx],
        }
