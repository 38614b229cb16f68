"""Discrete action facade over a 1-D continuous env, for Q-learning agents."""

import numpy as np

from .base import Continuous, Discrete, EnvSpec


class DiscretizedActions:
    """Exposes n evenly spaced torque/thrust levels across the action range."""

    def __init__(self, env, n_bins=11):
        space = env.spec.action_space
        if not isinstance(space, Continuous) or space.dim != 1:
            raise ValueError("can only discretize a 1-D continuous action space")
        if n_bins < 2:
            raise ValueError("need at least 2 action bins")
        self.env = env
        self.levels = np.linspace(space.low, space.high, n_bins)
        self.spec = EnvSpec(
            name=env.spec.name,
            state_dim=env.spec.state_dim,
            action_space=Discrete(n_bins),
            max_episode_steps=env.spec.max_episode_steps,
            feature_names=list(env.spec.feature_names),
        )

    def __getattr__(self, item):
        return getattr(self.env, item)

    def reset(self, seed=None):
        return self.env.reset(seed)

    def step(self, action):
        action = self.spec.action_space.validate(action)
        return self.env.step(np.array([self.levels[action]]))
