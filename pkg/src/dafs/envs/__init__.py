"""Classic-control tasks, feature augmentation, masking, synthetic sensors."""

from .augment import AugmentedEnv
from .base import Continuous, Discrete, Env, EnvSpec, StepResult
from .classic import Acrobot, CartPole, MountainCar, MountainCarContinuous, Pendulum
from .discretize import DiscretizedActions
from .mask import MaskedEnv
from .registry import env_names, make, make_base, write_trajectory_csv
from .synth import SynthSensorField

__all__ = [
    "Acrobot",
    "AugmentedEnv",
    "CartPole",
    "Continuous",
    "Discrete",
    "DiscretizedActions",
    "Env",
    "EnvSpec",
    "MaskedEnv",
    "MountainCar",
    "MountainCarContinuous",
    "Pendulum",
    "StepResult",
    "SynthSensorField",
    "env_names",
    "make",
    "make_base",
    "write_trajectory_csv",
]
