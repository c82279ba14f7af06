"""Independent reference implementations used as test oracles."""

import numpy as np

from echoimaging.reconstruct import layers as L
from echoimaging.reconstruct.network import _backward, _forward, init_network

TINY_PLAN = ((3, 4, 4), (3, 2))  # 8 bins -> 1x1 bottleneck -> 4x4 image


def central_difference(f, x, h):
    """Numerical gradient of scalar ``f`` w.r.t. array ``x`` (modified in place, restored)."""
    g = np.zeros_like(x, dtype=np.float64)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_error(analytic, numeric) -> float:
    """Max elementwise error relative to the larger of the two gradient magnitudes."""
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    scale = max(np.abs(a).max(), np.abs(n).max(), 1e-12)
    return float(np.abs(a - n).max() / scale)


def naive_conv1d(x, w, b, stride):
    """Direct loop 'same' convolution, channels-last."""
    bsz, length, cin = x.shape
    k, _, cout = w.shape
    lout = -(-length // stride)
    total = max((lout - 1) * stride + k - length, 0)
    left = total // 2
    out = np.zeros((bsz, lout, cout)) + b
    for o in range(lout):
        for t in range(k):
            i = o * stride + t - left
            if 0 <= i < length:
                out[:, o, :] += x[:, i, :] @ w[t]
    return out


def naive_upconv(x, w, b):
    """Nearest-neighbour 2x upsampling then a direct 'same' 2-D convolution."""
    up = x.repeat(2, axis=1).repeat(2, axis=2)
    bsz, h, wd, cin = up.shape
    k = w.shape[0]
    p = k // 2
    upp = np.pad(up, ((0, 0), (p, p), (p, p), (0, 0)))
    out = np.zeros((bsz, h, wd, w.shape[3])) + b
    for dy in range(k):
        for dx in range(k):
            out += upp[:, dy : dy + h, dx : dx + wd, :] @ w[dy, dx]
    return out


def layer_cases(rng):
    """(name, forward(params...) -> array, list of arrays to perturb, step) per layer type."""
    x1 = rng.normal(size=(2, 8, 3))
    w1 = rng.normal(scale=1e-2, size=(7, 3, 4))
    b1 = rng.normal(scale=1e-2, size=4)
    x2 = rng.normal(size=(2, 2, 2, 3))
    w2 = rng.normal(scale=1e-2, size=(5, 5, 3, 2))
    b2 = rng.normal(scale=1e-2, size=2)
    x3 = rng.normal(size=(2, 4, 4, 2))
    w3 = rng.normal(scale=1e-2, size=(2, 1))
    b3 = rng.normal(scale=1e-2, size=1)
    # activations: inputs kept at least 10 steps away from the kinks
    xr = rng.choice([-1.0, 1.0], size=(2, 4, 4)) * rng.uniform(0.01, 1.0, size=(2, 4, 4))
    xc = rng.uniform(-0.5, 1.5, size=(2, 4, 4))
    xc[np.abs(xc) < 0.01] = 0.02
    xc[np.abs(xc - 1) < 0.01] = 0.98

    def conv1d(x, w, b):
        return L.conv1d_forward(x, w, b, 2)

    def relu(x):
        return L.relu_forward(x)

    def clamp(x):
        return L.unit_clamp_forward(x)

    return [
        ("conv1d", conv1d, L.conv1d_backward, [x1, w1, b1]),
        ("upconv2d", L.upconv2d_forward, L.upconv2d_backward, [x2, w2, b2]),
        ("project", L.project_forward, L.project_backward, [x3, w3, b3]),
        ("relu", relu, None, [xr]),
        ("unit_clamp", clamp, None, [xc]),
    ]


def check_layer(fwd, bwd, arrays, rng, h=1e-3) -> float:
    """Worst relative error between analytic and central-difference gradients of ``sum(R * out)``."""
    out, cache = fwd(*arrays)
    r = rng.normal(size=out.shape)
    if bwd is None:
        # activations return (value, mask); gradient is the mask
        analytic = [r * cache]
    else:
        analytic = list(bwd(r, arrays[1], cache))
    worst = 0.0
    for a, g in zip(arrays, analytic):
        num = central_difference(lambda: float(np.sum(r * fwd(*arrays)[0])), a, h)
        worst = max(worst, rel_error(g, num))
    return worst


def check_network(seed, rng, h=1e-6) -> float:
    """Worst relative error over every weight array of a tiny 8-bin -> 4x4 network."""
    p = init_network(seed, 8, 4, 4, TINY_PLAN, dtype=np.float64)
    for i, w in enumerate(p.weights):
        w += rng.normal(scale=0.1, size=w.shape)
    x = rng.uniform(0, 1, size=(3, 8))
    t = rng.uniform(0, 1, size=(3, 4, 4))

    def loss():
        y, _ = _forward(p, x, keep=False)
        return float(np.mean((y - t) ** 2))

    y, caches = _forward(p, x, keep=True)
    grads = _backward(p, 2.0 * (y - t) / y.size, caches)
    worst = 0.0
    for w, g in zip(p.weights, grads):
        worst = max(worst, rel_error(g, central_difference(loss, w, h)))
    return worst
