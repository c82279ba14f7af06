"""ETW1 binary container for network parameters.

Little-endian throughout::

    b"ETW1"
    u32 version (1)
    u32 input_bins, output_h, output_w
    u32 n_down, n_up
    f64 count_scale, depth_scale_m
    u32 count transform (0 linear, 1 sqrt)
    u64 adam step
    u32 n_layers
    n_layers x { u32 kind (0 conv1d, 1 upconv2d, 2 project)
                 u32 kernel ndim, u32 dims[ndim], u32 bias length }
    u32 has_moments (0 or 1)
    f32 payload: for each layer kernel then bias; then, if has_moments,
                 the first-moment arrays followed by the second-moment arrays
                 in the same order
"""

from __future__ import annotations

import struct
from io import BytesIO

import numpy as np

from .network import NetworkParams

MAGIC = b"ETW1"
VERSION = 1
_KINDS = {"conv1d": 0, "upconv2d": 1, "project": 2}
_TRANSFORMS = ("linear", "sqrt")


def dumps(params: NetworkParams, include_moments: bool = True) -> bytes:
    out = BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", VERSION))
    out.write(struct.pack("<3I", params.input_bins, params.output_h, params.output_w))
    out.write(struct.pack("<2I", len(params.down), len(params.up)))
    out.write(struct.pack("<2d", params.count_scale, params.depth_scale_m))
    out.write(struct.pack("<I", _TRANSFORMS.index(params.count_transform)))
    out.write(struct.pack("<Q", params.step))
    kinds = params.layer_kinds()
    out.write(struct.pack("<I", len(kinds)))
    for i, kind in enumerate(kinds):
        w, b = params.weights[2 * i], params.weights[2 * i + 1]
        out.write(struct.pack("<2I", _KINDS[kind], w.ndim))
        out.write(struct.pack(f"<{w.ndim}I", *w.shape))
        out.write(struct.pack("<I", b.size))
    out.write(struct.pack("<I", int(include_moments)))
    arrays = list(params.weights)
    if include_moments:
        arrays += params.m + params.v
    for a in arrays:
        out.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return out.getvalue()


def loads(blob: bytes) -> NetworkParams:
    buf = BytesIO(blob)

    def read(fmt):
        size = struct.calcsize(fmt)
        chunk = buf.read(size)
        if len(chunk) != size:
            raise ValueError("truncated ETW1 blob")
        return struct.unpack(fmt, chunk)

    if buf.read(4) != MAGIC:
        raise ValueError("not an ETW1 blob")
    (version,) = read("<I")
    if version != VERSION:
        raise ValueError(f"unsupported ETW1 version {version}")
    bins, oh, ow = read("<3I")
    nd, nu = read("<2I")
    count_scale, depth_scale = read("<2d")
    (transform,) = read("<I")
    if transform >= len(_TRANSFORMS):
        raise ValueError(f"unknown count transform code {transform}")
    (step,) = read("<Q")
    (n_layers,) = read("<I")
    shapes = []
    for _ in range(n_layers):
        _kind, ndim = read("<2I")
        dims = read(f"<{ndim}I")
        (blen,) = read("<I")
        shapes += [tuple(dims), (blen,)]
    (has_moments,) = read("<I")

    def take(shape):
        count = int(np.prod(shape))
        raw = buf.read(4 * count)
        if len(raw) != 4 * count:
            raise ValueError("truncated ETW1 payload")
        return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)

    weights = [take(s) for s in shapes]
    m = [take(s) for s in shapes] if has_moments else []
    v = [take(s) for s in shapes] if has_moments else []
    if buf.read(1):
        raise ValueError("trailing bytes after ETW1 payload")
    down = tuple(int(weights[2 * i].shape[-1]) for i in range(nd))
    up = tuple(int(weights[2 * (nd + j)].shape[-1]) for j in range(nu))
    return NetworkParams(bins, oh, ow, down, up, weights, m, v, step, count_scale, depth_scale, _TRANSFORMS[transform])


def save(params: NetworkParams, path, include_moments: bool = True) -> None:
    with open(path, "wb") as f:
        f.write(dumps(params, include_moments))


def load(path) -> NetworkParams:
    with open(path, "rb") as f:
        return loads(f.read())
