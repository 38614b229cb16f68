"""Training configuration: one flat record holding every knob a run needs.

Serialization materializes every default so a saved config fully describes
its run; loading rejects unknown keys instead of guessing.
"""

from dataclasses import asdict, dataclass, fields

ALGORITHMS = ("ppo", "dqn", "ddpg")


@dataclass
class TrainConfig:
    env: str = "cartpole"
    algorithm: str = "ppo"
    iterations: int = 200
    steps_per_iteration: int = 2048
    workers: int = 1
    seed: int = 0

    # ranking and stability detection
    snapshot_window: float = 0.1  # fraction of iterations averaged for the ranking
    plateau_window: int = 20
    plateau_tolerance: float = 0.02

    # shared network / optimization settings
    gamma: float = 0.99
    n_e: int = 20
    actor_hidden: tuple = (64, 64)
    critic_hidden: tuple = (512, 512)
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    attention_lr: float = 1e-3

    # ppo
    clip_eps: float = 0.2
    lam: float = 0.95
    ppo_epochs: int = 4
    minibatch: int = 64
    entropy_coef: float = 0.0
    advantage_mode: str = "gae"

    # dqn / ddpg replay settings
    buffer_capacity: int = 50_000
    batch_size: int = 64
    updates_per_iteration: int = 0  # 0 means one update per collected step
    warmup_steps: int = 500

    # dqn
    target_sync_interval: int = 200  # in update steps
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5  # of the total step budget
    action_bins: int = 11  # discretization when dqn drives a continuous env

    # ddpg
    tau: float = 0.005
    noise_std: float = 0.1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"algorithm {self.algorithm!r} not one of {', '.join(ALGORITHMS)}"
            )
        if self.workers < 1:
            raise ValueError(f"workers {self.workers} must be >= 1")
        if self.iterations < 0:
            raise ValueError(f"iterations {self.iterations} must be >= 0")
        if self.steps_per_iteration < 1:
            raise ValueError("steps_per_iteration must be >= 1")
        if self.steps_per_iteration % self.workers != 0:
            raise ValueError(
                f"steps_per_iteration {self.steps_per_iteration} not divisible "
                f"by workers {self.workers}"
            )
        if not 0.0 < self.snapshot_window <= 1.0:
            raise ValueError(f"snapshot_window {self.snapshot_window} outside (0, 1]")
        if self.plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma {self.gamma} outside [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.updates_per_iteration < 0:
            raise ValueError("updates_per_iteration must be >= 0")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError(
                f"epsilon schedule needs 0 <= eps_end <= eps_start <= 1, "
                f"got [{self.eps_end}, {self.eps_start}]"
            )
        if not 0.0 < self.eps_decay_fraction <= 1.0:
            raise ValueError("eps_decay_fraction outside (0, 1]")
        if self.action_bins < 2:
            raise ValueError("action_bins must be >= 2")
        self.actor_hidden = tuple(int(h) for h in self.actor_hidden)
        self.critic_hidden = tuple(int(h) for h in self.critic_hidden)

    @property
    def steps_per_worker(self):
        return self.steps_per_iteration // self.workers

    @property
    def dqn_updates(self):
        return self.updates_per_iteration or self.steps_per_iteration

    def to_dict(self):
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config field: {', '.join(unknown)}")
        return cls(**d)
