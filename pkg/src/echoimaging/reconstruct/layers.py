"""Layer primitives with hand-written backward passes, channels-last layout.

Shapes: 1-D signals are ``(batch, length, channels)``, images
``(batch, height, width, channels)``. Padding follows the usual "same"
convention: for stride ``s`` the output length is ``ceil(L / s)`` and the
total padding is split with the extra element on the right/bottom.
"""

from __future__ import annotations

import numpy as np


def _same_pad(length: int, kernel: int, stride: int) -> tuple[int, int, int]:
    out = -(-length // stride)
    total = max((out - 1) * stride + kernel - length, 0)
    return out, total // 2, total - total // 2


# -- 1-D convolution -------------------------------------------------------------


def conv1d_forward(x, w, b, stride=2):
    """x: (B, L, Cin), w: (K, Cin, Cout), b: (Cout,) -> (B, Lout, Cout)."""
    bsz, length, cin = x.shape
    k, _, cout = w.shape
    lout, left, right = _same_pad(length, k, stride)
    xp = np.pad(x, ((0, 0), (left, right), (0, 0)))
    # gather (B, Lout, K, Cin) windows
    idx = np.arange(lout)[:, None] * stride + np.arange(k)[None, :]
    cols = xp[:, idx, :]
    out = cols.reshape(bsz * lout, k * cin) @ w.reshape(k * cin, cout) + b
    return out.reshape(bsz, lout, cout), (xp.shape, cols, idx, left, length)


def conv1d_backward(dout, w, cache):
    xp_shape, cols, idx, left, length = cache
    bsz, lout, cout = dout.shape
    k, cin, _ = w.shape
    d2 = dout.reshape(bsz * lout, cout)
    dw = (cols.reshape(bsz * lout, k * cin).T @ d2).reshape(w.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ w.reshape(k * cin, cout).T).reshape(bsz, lout, k, cin)
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for tap in range(k):
        dxp[:, idx[:, tap], :] += dcols[:, :, tap, :]
    return dxp[:, left : left + length, :], dw, db


# -- 2-D convolution, stride 1 ----------------------------------------------------


def conv2d_forward(x, w, b):
    """x: (B, H, W, Cin), w: (KH, KW, Cin, Cout), b: (Cout,) -> (B, H, W, Cout).

    Computed as a sum of one matrix product per kernel tap, which keeps the
    working set at a single shifted copy of the input.
    """
    bsz, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    _, top, bottom = _same_pad(h, kh, 1)
    _, lft, rgt = _same_pad(wd, kw, 1)
    xp = np.pad(x, ((0, 0), (top, bottom), (lft, rgt), (0, 0)))
    out = np.empty((bsz, h, wd, cout), dtype=np.result_type(x, w))
    out[...] = b
    flat = out.reshape(-1, cout)
    for dy in range(kh):
        for dx in range(kw):
            tap = xp[:, dy : dy + h, dx : dx + wd, :].reshape(-1, cin)
            flat += tap @ w[dy, dx]
    return out, (xp, top, lft)


def conv2d_backward(dout, w, cache):
    xp, top, lft = cache
    bsz, h, wd, cout = dout.shape
    kh, kw, cin, _ = w.shape
    d2 = dout.reshape(-1, cout)
    dw = np.empty_like(w)
    dxp = np.zeros_like(xp)
    for dy in range(kh):
        for dx in range(kw):
            tap = xp[:, dy : dy + h, dx : dx + wd, :].reshape(-1, cin)
            dw[dy, dx] = tap.T @ d2
            dxp[:, dy : dy + h, dx : dx + wd, :] += (d2 @ w[dy, dx].T).reshape(bsz, h, wd, cin)
    db = d2.sum(axis=0)
    return dxp[:, top : top + h, lft : lft + wd, :], dw, db


# -- pointwise projection ---------------------------------------------------------


def project_forward(x, w, b):
    """1x1 convolution: x (..., Cin) @ w (Cin, Cout) + b."""
    return x @ w + b, x


def project_backward(dout, w, cache):
    x = cache
    cin, cout = w.shape
    x2 = x.reshape(-1, cin)
    d2 = dout.reshape(-1, cout)
    return (d2 @ w.T).reshape(x.shape), x2.T @ d2, d2.sum(axis=0)


# -- activations and reshaping ------------------------------------------------------


def relu_forward(x):
    return np.maximum(x, 0), x > 0


def relu_backward(dout, mask):
    return dout * mask


def unit_clamp_forward(x):
    """ReLU followed by saturation at 1."""
    return np.clip(x, 0, 1), (x > 0) & (x < 1)


def upsample2x_forward(x):
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2x_backward(dout):
    bsz, h, w, c = dout.shape
    return dout.reshape(bsz, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


# -- fused nearest-neighbour 2x upsampling + 5x5 "same" convolution -------------
#
# Output row 2i + a only sees low-resolution rows i - 1, i, i + 1, so the pair
# is an exact 3x3 convolution per output phase (a, b) on the low-resolution
# input. _PHASE[a, u, d] = 1 when kernel row d lands on low-res offset u - 1.


def _phase_matrix(k: int) -> np.ndarray:
    half = k // 2
    offsets = [[(a + d - half) // 2 for d in range(k)] for a in range(2)]
    lo = min(min(o) for o in offsets)
    hi = max(max(o) for o in offsets)
    m = np.zeros((2, hi - lo + 1, k))
    for a in range(2):
        for d, off in enumerate(offsets[a]):
            m[a, off - lo, d] = 1.0
    return m


_PHASE_CACHE: dict[int, np.ndarray] = {}


def _phase(k: int) -> np.ndarray:
    if k not in _PHASE_CACHE:
        _PHASE_CACHE[k] = _phase_matrix(k)
    return _PHASE_CACHE[k]


def _im2col3(xp, h, w, taps):
    bsz, _, _, cin = xp.shape
    cols = np.empty((bsz, h, w, taps, taps, cin), dtype=xp.dtype)
    for u in range(taps):
        for v in range(taps):
            cols[:, :, :, u, v, :] = xp[:, u : u + h, v : v + w, :]
    return cols.reshape(bsz * h * w, taps * taps * cin)


def upconv2d_forward(x, w, b):
    """Equivalent to ``conv2d_forward(upsample2x_forward(x), w, b)``.

    x: (B, H, W, Cin), w: (K, K, Cin, Cout) with odd K -> (B, 2H, 2W, Cout).
    """
    bsz, h, wd, cin = x.shape
    k = w.shape[0]
    cout = w.shape[3]
    m = _phase(k).astype(w.dtype)
    taps = m.shape[1]
    r = (taps - 1) // 2
    # effective kernels, (u, v, Cin, a, b, Cout)
    weff = np.einsum("aud,bve,deio->uviabo", m, m, w).reshape(taps * taps * cin, 4 * cout)
    xp = np.pad(x, ((0, 0), (r, r), (r, r), (0, 0)))
    cols = _im2col3(xp, h, wd, taps)
    out = cols @ weff
    out = out.reshape(bsz, h, wd, 2, 2, cout).transpose(0, 1, 3, 2, 4, 5)
    out = out.reshape(bsz, 2 * h, 2 * wd, cout) + b
    return out, (cols, weff, x.shape, taps)


def upconv2d_backward(dout, w, cache):
    cols, weff, xshape, taps = cache
    bsz, h, wd, cin = xshape
    k = w.shape[0]
    cout = w.shape[3]
    m = _phase(k).astype(w.dtype)
    db = dout.reshape(-1, cout).sum(axis=0)
    dph = dout.reshape(bsz, h, 2, wd, 2, cout).transpose(0, 1, 3, 2, 4, 5).reshape(-1, 4 * cout)
    dweff = (cols.T @ dph).reshape(taps, taps, cin, 2, 2, cout)
    dw = np.einsum("aud,bve,uviabo->deio", m, m, dweff)
    dcols = (dph @ weff.T).reshape(bsz, h, wd, taps, taps, cin)
    r = (taps - 1) // 2
    dxp = np.zeros((bsz, h + 2 * r, wd + 2 * r, cin), dtype=dout.dtype)
    for u in range(taps):
        for v in range(taps):
            dxp[:, u : u + h, v : v + wd, :] += dcols[:, :, :, u, v, :]
    return dxp[:, r : r + h, r : r + wd, :], dw, db
