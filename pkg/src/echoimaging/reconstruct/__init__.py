"""Learned inverse model mapping echo histograms to depth images."""

from .network import NetworkParams, ShapeError, forward, init_network, loss_and_gradients
from .optim import adam_step
from .serialize import load, save
from .training import (
    COUNT_TRANSFORMS,
    TrainConfig,
    TrainingData,
    TrainReport,
    evaluate_mse,
    linear_epoch_budget,
    predict,
    train,
    transform_counts,
)

__all__ = [
    "NetworkParams", "ShapeError", "forward", "init_network", "loss_and_gradients",
    "adam_step", "load", "save", "TrainConfig", "TrainingData", "TrainReport",
    "evaluate_mse", "linear_epoch_budget", "predict", "train", "COUNT_TRANSFORMS", "transform_counts",
]
