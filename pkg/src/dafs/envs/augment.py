"""Feature augmentation: trig channels plus partial and full noise sensors.

Wraps a base task and appends, in order: sin/cos of every angle feature,
one partial-noise channel (an even mixture of the first base feature,
min-max normalized to [-1, 1], and fresh uniform noise), and one pure-noise
channel (fresh Uniform(-1, 1) every observation).  Noise is drawn from a
stream independent of the initial-state stream, so feature masking and
re-evaluation never perturb the dynamics.
"""

import numpy as np

from .base import EnvSpec


class AugmentedEnv:
    def __init__(self, base):
        self.base = base
        self.angle_indices = tuple(base.angle_indices)
        names = list(base.spec.feature_names)
        for i in self.angle_indices:
            names.append(f"sin_{base.spec.feature_names[i]}")
            names.append(f"cos_{base.spec.feature_names[i]}")
        names.append("partial_noise")
        names.append("noise")
        self.spec = EnvSpec(
            name=base.spec.name,
            state_dim=len(names),
            action_space=base.spec.action_space,
            max_episode_steps=base.spec.max_episode_steps,
            feature_names=names,
        )
        lo, hi = base.base_ranges[0]
        self._norm_lo, self._norm_span = lo, hi - lo
        self._obs = None

    @property
    def state(self):
        return self.base.state

    @state.setter
    def state(self, value):
        self.base.state = value

    def _build_obs(self, base_obs):
        parts = [base_obs]
        for i in self.angle_indices:
            parts.append([np.sin(base_obs[i]), np.cos(base_obs[i])])
        normalized = 2.0 * (base_obs[0] - self._norm_lo) / self._norm_span - 1.0
        partial = 0.5 * normalized + 0.5 * self.noise_rng.uniform(-1.0, 1.0)
        full = self.noise_rng.uniform(-1.0, 1.0)
        parts.append([partial, full])
        self._obs = np.concatenate(parts)
        return self._obs.copy()

    def reset(self, seed=None):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        init_ss, noise_ss = ss.spawn(2)
        self.noise_rng = np.random.default_rng(noise_ss)
        return self._build_obs(self.base.reset(init_ss))

    def observe(self):
        """Most recent augmented observation (noise already drawn)."""
        return self._obs.copy()

    def step(self, action):
        res = self.base.step(action)
        res.state = self._build_obs(res.state)
        return res
