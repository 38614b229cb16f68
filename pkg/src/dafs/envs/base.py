"""Environment protocol: spaces, specs, step results, seeding helpers."""

from dataclasses import dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True)
class Discrete:
    n: int

    def contains(self, action):
        return (
            isinstance(action, (int, np.integer))
            and not isinstance(action, (bool, np.bool_))
            and 0 <= int(action) < self.n
        )

    def validate(self, action):
        if not self.contains(action):
            raise ValueError(f"action {action!r} outside discrete range [0, {self.n})")
        return int(action)


@dataclass(frozen=True)
class Continuous:
    low: float
    high: float
    dim: int = 1

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"continuous bounds require low < high, got [{self.low}, {self.high}]")

    def validate(self, action):
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        if a.size != self.dim:
            raise ValueError(f"action has {a.size} components, expected {self.dim}")
        if not np.all(np.isfinite(a)):
            raise ValueError("action has non-finite components")
        if np.any(a < self.low) or np.any(a > self.high):
            raise ValueError(
                f"action {a.tolist()} outside bounds [{self.low}, {self.high}]"
            )
        return a


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_space: object
    max_episode_steps: int
    feature_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.feature_names) != self.state_dim:
            raise ValueError(
                f"{self.name}: {len(self.feature_names)} feature names "
                f"for state_dim {self.state_dim}"
            )


@dataclass
class StepResult:
    state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    steps: int

    @property
    def done(self):
        """Episode boundary: true termination or time-limit truncation.

        Value bootstrapping must distinguish the two; replay code uses
        `terminated` directly and only episode loops should read `done`.
        """
        return self.terminated or self.truncated


def rng_from(seed):
    """Generator from an int seed, a SeedSequence, or None (OS entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class Env:
    """Minimal episodic protocol shared by every task here.

    Subclasses define _reset_state(rng) and _step(action) over a settable
    `.state` array; this base class owns step counting and time limits.
    Instances are single-threaded; clone-per-worker for parallelism.
    """

    spec: EnvSpec

    def __init__(self):
        self._steps = 0
        self._done = True

    def reset(self, seed=None):
        self.rng = rng_from(seed)
        self._steps = 0
        self._done = False
        self.state = self._reset_state(self.rng)
        return self._fresh_obs()

    def _fresh_obs(self):
        """Observation for the state just produced; called exactly once per
        transition so stochastic sensors stay aligned with the trajectory."""
        return np.array(self.state, dtype=np.float64)

    def observe(self):
        return np.array(self.state, dtype=np.float64)

    def step(self, action):
        if self._done:
            raise RuntimeError(f"{self.spec.name}: episode finished; call reset")
        action = self.spec.action_space.validate(action)
        reward, terminated = self._step(action)
        self._steps += 1
        truncated = self._steps >= self.spec.max_episode_steps and not terminated
        self._done = terminated or truncated
        return StepResult(self._fresh_obs(), float(reward), terminated, truncated, self._steps)

    def _reset_state(self, rng):
        raise NotImplementedError

    def _step(self, action):
        raise NotImplementedError
