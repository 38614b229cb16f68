"""Training loop: parallel collection, gradient-averaged updates, reports."""

from .config import ALGORITHMS, TrainConfig
from .rollout import RolloutWorker, WorkerFailure, merge_batches, parallel_collect
from .trainer import (
    Trainer,
    TrainingDiverged,
    TrainReport,
    averaged_update,
    detect_plateau,
    ranking_window,
    train,
)

__all__ = [
    "ALGORITHMS",
    "RolloutWorker",
    "TrainConfig",
    "TrainReport",
    "Trainer",
    "TrainingDiverged",
    "WorkerFailure",
    "averaged_update",
    "detect_plateau",
    "merge_batches",
    "parallel_collect",
    "ranking_window",
    "train",
]
