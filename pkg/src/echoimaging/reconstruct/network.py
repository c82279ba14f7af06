"""Hourglass network: 1-D strided encoder, 2-D upsampling decoder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import layers as L

DOWN_KERNEL = 7
DOWN_STRIDE = 2
UP_KERNEL = 5

DEFAULT_DOWN = (16, 32, 64, 64)
DEFAULT_UP = (64, 32, 16, 8)
OUTPUT_BIAS_INIT = 0.5


class ShapeError(ValueError):
    pass


@dataclass
class NetworkParams:
    """Weights, input/output normalisation and Adam state of one network.

    ``weights`` alternates kernel, bias for each layer in order: the
    downsampling convolutions, the upsampling convolutions and the final
    1x1 projection. ``m`` and ``v`` mirror ``weights``.
    """

    input_bins: int
    output_h: int
    output_w: int
    down: tuple[int, ...]
    up: tuple[int, ...]
    weights: list[np.ndarray]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    count_scale: float = 1.0
    depth_scale_m: float = 1.0
    count_transform: str = "linear"

    def __post_init__(self):
        if not self.m:
            self.m = [np.zeros_like(w) for w in self.weights]
        if not self.v:
            self.v = [np.zeros_like(w) for w in self.weights]

    @property
    def bottleneck(self) -> tuple[int, int]:
        scale = 2 ** len(self.up)
        return self.output_h // scale, self.output_w // scale

    @property
    def n_layers(self) -> int:
        return len(self.weights) // 2

    @property
    def dtype(self):
        return self.weights[0].dtype

    def layer_kinds(self) -> list[str]:
        return ["conv1d"] * len(self.down) + ["upconv2d"] * len(self.up) + ["project"]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.input_bins, self.output_h, self.output_w, self.down, self.up,
            [w.copy() for w in self.weights], [a.copy() for a in self.m],
            [a.copy() for a in self.v], self.step, self.count_scale, self.depth_scale_m, self.count_transform,
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights)


def check_plan(input_bins: int, output_h: int, output_w: int, down, up) -> tuple[int, int]:
    """Validate a shape plan and return the bottleneck grid ``(h0, w0)``."""
    if not down or not up:
        raise ShapeError("need at least one downsampling and one upsampling block")
    nd, nu = len(down), len(up)
    if input_bins < 1 or input_bins % (DOWN_STRIDE**nd):
        raise ShapeError(f"input_bins={input_bins} not divisible by {DOWN_STRIDE**nd}")
    if output_h % (2**nu) or output_w % (2**nu):
        raise ShapeError(f"output {output_h}x{output_w} not divisible by {2**nu}")
    h0, w0 = output_h // 2**nu, output_w // 2**nu
    if h0 * w0 != input_bins // DOWN_STRIDE**nd:
        raise ShapeError(
            f"bottleneck length {input_bins // DOWN_STRIDE**nd} cannot be reshaped to {h0}x{w0}"
        )
    return h0, w0


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_network(
    seed: int,
    input_bins: int = 256,
    output_h: int = 64,
    output_w: int = 64,
    feature_plan: tuple = (DEFAULT_DOWN, DEFAULT_UP),
    dtype=np.float32,
) -> NetworkParams:
    """Glorot-uniform kernels, zero hidden biases; deterministic given ``seed``.

    The output bias starts at 0.5, the middle of the normalised depth range.
    """
    down, up = (tuple(int(c) for c in part) for part in feature_plan)
    check_plan(input_bins, output_h, output_w, down, up)
    rng = np.random.default_rng(seed)
    weights = []
    cin = 1
    for cout in down:
        k = DOWN_KERNEL
        weights += [_glorot(rng, (k, cin, cout), k * cin, k * cout, dtype), np.zeros(cout, dtype)]
        cin = cout
    for cout in up:
        k = UP_KERNEL
        weights += [
            _glorot(rng, (k, k, cin, cout), k * k * cin, k * k * cout, dtype),
            np.zeros(cout, dtype),
        ]
        cin = cout
    # output bias starts mid-range so the clamped output is not dead at step 0
    weights += [_glorot(rng, (cin, 1), cin, 1, dtype), np.full(1, OUTPUT_BIAS_INIT, dtype)]
    return NetworkParams(input_bins, output_h, output_w, down, up, weights)


# -- forward / backward ----------------------------------------------------------------


def _forward(params: NetworkParams, x: np.ndarray, keep: bool):
    nd, nu = len(params.down), len(params.up)
    ws = params.weights
    caches = []
    a = x[:, :, None]
    for i in range(nd):
        z, c = L.conv1d_forward(a, ws[2 * i], ws[2 * i + 1], DOWN_STRIDE)
        a, mask = L.relu_forward(z)
        caches.append((c, mask))
    h0, w0 = params.bottleneck
    a = a.reshape(a.shape[0], h0, w0, a.shape[2])
    for j in range(nu):
        i = nd + j
        z, c = L.upconv2d_forward(a, ws[2 * i], ws[2 * i + 1])
        a, mask = L.relu_forward(z)
        caches.append((c, mask))
    i = nd + nu
    z, c = L.project_forward(a, ws[2 * i], ws[2 * i + 1])
    y, mask = L.unit_clamp_forward(z[..., 0])
    caches.append((c, mask))
    return y, (caches if keep else None)


def _backward(params: NetworkParams, dy: np.ndarray, caches) -> list[np.ndarray]:
    nd, nu = len(params.down), len(params.up)
    ws = params.weights
    grads: list[np.ndarray] = [None] * len(ws)  # type: ignore[list-item]
    i = nd + nu
    c, mask = caches[i]
    dz = (dy * mask)[..., None]
    da, grads[2 * i], grads[2 * i + 1] = L.project_backward(dz, ws[2 * i], c)
    for j in reversed(range(nu)):
        i = nd + j
        c, mask = caches[i]
        da, grads[2 * i], grads[2 * i + 1] = L.upconv2d_backward(L.relu_backward(da, mask), ws[2 * i], c)
    da = da.reshape(da.shape[0], -1, da.shape[3])
    for i in reversed(range(nd)):
        c, mask = caches[i]
        da, grads[2 * i], grads[2 * i + 1] = L.conv1d_backward(L.relu_backward(da, mask), ws[2 * i], c)
    return grads


def _as_batch(params: NetworkParams, histogram_batch) -> np.ndarray:
    x = np.asarray(histogram_batch, dtype=params.dtype)
    if x.ndim == 1:
        x = x[None]
    if x.ndim != 2 or x.shape[1] != params.input_bins:
        raise ShapeError(f"expected histograms of {params.input_bins} bins, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x


def forward(params: NetworkParams, histogram_batch) -> np.ndarray:
    """Normalised depth images in [0, 1], shape (batch, output_h, output_w)."""
    y, _ = _forward(params, _as_batch(params, histogram_batch), keep=False)
    return y


def loss_and_gradients(params: NetworkParams, histogram_batch, target_batch):
    """Batch-mean pixelwise MSE and its gradient for every weight array."""
    x = _as_batch(params, histogram_batch)
    t = np.asarray(target_batch, dtype=params.dtype)
    if t.shape != (x.shape[0], params.output_h, params.output_w):
        raise ShapeError(f"target shape {t.shape} does not match output")
    y, caches = _forward(params, x, keep=True)
    diff = y - t
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    dy = (2.0 / diff.size) * diff
    return loss, _backward(params, dy.astype(params.dtype), caches)
