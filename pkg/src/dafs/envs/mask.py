"""Project an env's observations onto a selected feature subset."""

import numpy as np

from .base import EnvSpec


class MaskedEnv:
    """Same dynamics and reward, observations restricted to `indices`.

    Indices are kept in ascending order regardless of how the subset was
    discovered, so masked observations are a stable projection of the full
    ones.
    """

    def __init__(self, env, indices):
        m = env.spec.state_dim
        idx = sorted({int(i) for i in indices})
        if not idx:
            raise ValueError("feature subset is empty")
        if idx[0] < 0 or idx[-1] >= m:
            raise ValueError(f"feature indices {idx} outside [0, {m})")
        self.env = env
        self.indices = np.array(idx)
        self.spec = EnvSpec(
            name=f"{env.spec.name}:subset",
            state_dim=len(idx),
            action_space=env.spec.action_space,
            max_episode_steps=env.spec.max_episode_steps,
            feature_names=[env.spec.feature_names[i] for i in idx],
        )

    def reset(self, seed=None):
        return self.env.reset(seed)[self.indices]

    def observe(self):
        return self.env.observe()[self.indices]

    def step(self, action):
        res = self.env.step(action)
        res.state = res.state[self.indices]
        return res
