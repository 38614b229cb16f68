"""Synthetic many-sensor plant: a controlled oscillator behind a sensor wall.

Hidden state is a damped driven oscillator zdd = -w0^2 z - c zd + u.  Of the
m sensors, k_true read distinct fixed linear combinations of (z, zd) with
small Gaussian noise; the rest are pure Uniform(-1, 1) noise redrawn every
observation.  The true sensor set is exposed for recall scoring.  Stands in
for large probe arrays where only a few probes carry the flow state.
"""

import numpy as np

from .base import Continuous, Env, EnvSpec


class SynthSensorField(Env):
    OMEGA0_SQ = 2.25
    DAMPING = 0.15
    DT = 0.05
    READOUT_NOISE = 0.01

    def __init__(self, m=30, k_true=5, max_episode_steps=200):
        super().__init__()
        if not 1 <= k_true <= m:
            raise ValueError(f"need 1 <= k_true <= m, got k_true={k_true}, m={m}")
        self.m = int(m)
        self.k_true = int(k_true)
        # evenly spread sensor positions and readout directions: deterministic,
        # pairwise distinct, and independent of any seed
        self._informative = tuple(i * self.m // self.k_true for i in range(self.k_true))
        phis = np.pi * np.arange(self.k_true) / self.k_true
        self._readouts = np.stack([np.cos(phis), np.sin(phis)], axis=1)
        self.spec = EnvSpec(
            name=f"synth:m={self.m},k={self.k_true}",
            state_dim=self.m,
            action_space=Continuous(-2.0, 2.0, 1),
            max_episode_steps=max_episode_steps,
            feature_names=[f"sensor_{i}" for i in range(self.m)],
        )

    @property
    def informative_indices(self):
        """Ground-truth sensor set, for recall scoring."""
        return self._informative

    def _reset_state(self, rng):
        return np.array([rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)])

    def _fresh_obs(self):
        z, zd = self.state
        obs = np.empty(self.m)
        readout = dict(zip(self._informative, self._readouts))
        for i in range(self.m):
            if i in readout:
                w = readout[i]
                obs[i] = w[0] * z + w[1] * zd + self.rng.normal(0.0, self.READOUT_NOISE)
            else:
                obs[i] = self.rng.uniform(-1.0, 1.0)
        self._obs = obs
        return obs.copy()

    def observe(self):
        """Most recent sensor readings; sampling happens on reset/step only."""
        return self._obs.copy()

    def _step(self, action):
        z, zd = self.state
        u = float(action[0])
        reward = -(z**2 + 0.1 * zd**2)
        zd = zd + self.DT * (-self.OMEGA0_SQ * z - self.DAMPING * zd + u)
        z = z + self.DT * zd
        self.state = np.array([z, zd])
        return reward, False
