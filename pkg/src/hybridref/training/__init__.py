"""Optimization loop, schedule, SWA, and epoch-vote ensembling."""

from hybridref.training.ensemble import ensemble_vote, predictions_from_records
from hybridref.training.loop import (
    EpochMetrics,
    TrainConfig,
    TrainingSink,
    TrainResult,
    TrainState,
    build_vocab,
    score_mode_for,
    train,
)
from hybridref.training.optim import Adam, lr_at
from hybridref.training.swa import SwaAccumulator

__all__ = [
    "Adam",
    "EpochMetrics",
    "SwaAccumulator",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "TrainingSink",
    "build_vocab",
    "ensemble_vote",
    "lr_at",
    "predictions_from_records",
    "score_mode_for",
    "train",
]
