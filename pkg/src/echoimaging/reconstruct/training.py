"""Mini-batch training, evaluation and prediction."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..histogram import EchoHistogram
from ..tracer import DepthImage
from .network import DEFAULT_DOWN, DEFAULT_UP, NetworkParams, ShapeError, forward, init_network, loss_and_gradients
from .optim import adam_step


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 100
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    epochs: int = 110
    seed: int = 0
    path_count_tag: int | None = None
    down: tuple[int, ...] = DEFAULT_DOWN
    up: tuple[int, ...] = DEFAULT_UP

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        object.__setattr__(self, "down", tuple(self.down))
        object.__setattr__(self, "up", tuple(self.up))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["down"], d["up"] = list(self.down), list(self.up)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def linear_epoch_budget(max_bounces: int) -> int:
    """Epochs growing linearly from 110 (one bounce) to 350 (ten bounces)."""
    return int(round(110 + (max_bounces - 1) * (350 - 110) / 9))


COUNT_TRANSFORMS = ("linear", "sqrt")


def transform_counts(counts, kind: str = "linear") -> np.ndarray:
    """Elementwise count transform applied before scaling; ``sqrt`` stabilises Poisson variance."""
    counts = np.asarray(counts, dtype=np.float64)
    if kind == "linear":
        return counts
    if kind == "sqrt":
        return np.sqrt(counts)
    raise ValueError(f"unknown count transform {kind!r}; expected one of {COUNT_TRANSFORMS}")


@dataclass
class TrainingData:
    """Normalised network inputs and targets plus the scales that undo them."""

    x: np.ndarray
    y: np.ndarray
    count_scale: float = 1.0
    depth_scale_m: float = 1.0
    count_transform: str = "linear"

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("inputs and targets differ in length")
        if len(self.x) == 0:
            raise ValueError("empty dataset")

    def __len__(self):
        return len(self.x)

    @classmethod
    def from_raw(
        cls,
        counts,
        depths_m,
        depth_scale_m: float,
        count_scale: float | None = None,
        count_transform: str = "linear",
    ):
        """Divide (transformed) counts by their maximum, or by ``count_scale``, and depths by ``depth_scale_m``."""
        counts = transform_counts(counts, count_transform)
        if count_scale is None:
            count_scale = float(counts.max()) if counts.size and counts.max() > 0 else 1.0
        x = (counts / count_scale).astype(np.float32)
        y = (np.asarray(depths_m, dtype=np.float64) / depth_scale_m).astype(np.float32)
        return cls(x, y, float(count_scale), float(depth_scale_m), count_transform)

    def subset(self, idx) -> "TrainingData":
        return TrainingData(self.x[idx], self.y[idx], self.count_scale, self.depth_scale_m, self.count_transform)


@dataclass
class TrainReport:
    epoch_losses: list[float]
    final_test_mse: float | None
    wall_clock_s: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    @classmethod
    def from_json(cls, path) -> "TrainReport":
        with open(path) as f:
            return cls(**json.load(f))


def _batches(rng: np.random.Generator, n: int, batch_size: int):
    perm = rng.permutation(n)
    if n < batch_size:
        # cycle the shuffled samples to fill one batch
        yield np.resize(perm, batch_size)
        return
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def evaluate_mse(params: NetworkParams, data: TrainingData, batch_size: int = 100) -> float:
    """Mean per-image MSE on normalised targets."""
    total = 0.0
    for start in range(0, len(data), batch_size):
        y = forward(params, data.x[start : start + batch_size])
        t = data.y[start : start + batch_size]
        total += float(np.sum(np.mean((y.astype(np.float64) - t) ** 2, axis=(1, 2))))
    return total / len(data)


def train(
    data: TrainingData,
    config: TrainConfig,
    test: TrainingData | None = None,
    params: NetworkParams | None = None,
    log=None,
) -> tuple[NetworkParams, TrainReport]:
    """Train from fresh weights (seeded by ``config.seed``) unless ``params`` is given.

    Each epoch visits every sample once in a seeded shuffled order. The
    recorded epoch loss is the sample-weighted mean of the batch losses seen
    during that epoch.
    """
    t_start = time.perf_counter()
    n, bins = data.x.shape
    _, h, w = data.y.shape
    if params is None:
        params = init_network(config.seed, bins, h, w, (config.down, config.up))
    elif params.input_bins != bins:
        raise ShapeError("network input size does not match the data")
    params.count_scale = data.count_scale
    params.depth_scale_m = data.depth_scale_m
    params.count_transform = data.count_transform
    rng = np.random.default_rng([config.seed, 0x5EED])
    losses = []
    for epoch in range(config.epochs):
        acc, seen = 0.0, 0
        for idx in _batches(rng, n, config.batch_size):
            loss, grads = loss_and_gradients(params, data.x[idx], data.y[idx])
            adam_step(params, grads, config)
            acc += loss * len(idx)
            seen += len(idx)
        losses.append(acc / seen)
        if log is not None:
            log(epoch, losses[-1])
    test_mse = evaluate_mse(params, test) if test is not None else None
    report = TrainReport(losses, test_mse, time.perf_counter() - t_start, config.to_dict())
    return params, report


def predict(params: NetworkParams, histogram) -> DepthImage:
    """Depth image in meters from one raw (un-normalised) histogram."""
    counts = histogram.counts if isinstance(histogram, EchoHistogram) else histogram
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (params.input_bins,):
        raise ShapeError(f"histogram has {counts.size} bins, network expects {params.input_bins}")
    y = forward(params, transform_counts(counts, params.count_transform) / params.count_scale)[0]
    return DepthImage(y.astype(np.float64) * params.depth_scale_m)
