"""Adam with bias correction."""

from __future__ import annotations

import numpy as np

from .network import NetworkParams


def adam_step(params: NetworkParams, gradients, config) -> NetworkParams:
    """Apply one Adam update in place and return ``params``.

    ``config`` needs ``learning_rate``, ``adam_beta1``, ``adam_beta2`` and
    ``adam_epsilon`` attributes (a :class:`TrainConfig` works).
    """
    if len(gradients) != len(params.weights):
        raise ValueError("gradient list does not match parameters")
    for g in gradients:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    lr = config.learning_rate
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    params.step += 1
    t = params.step
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for w, g, m, v in zip(params.weights, gradients, params.m, params.v):
        g = g.astype(w.dtype, copy=False)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        w -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(w.dtype, copy=False)
    return params
