"""PGM and CSV helpers for depth images and histograms."""

from __future__ import annotations

import csv
import re

import numpy as np

PGM_MAXVAL = 65535


def write_pgm(path, depth_m, meters_per_level: float = 2e-4) -> None:
    """Write a depth map (meters) as a 16-bit binary PGM.

    Pixel value = round(depth / meters_per_level), clipped to 16 bits. The
    scale is recorded in a header comment so :func:`read_pgm` can undo it.
    """
    depth = np.asarray(depth_m, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError("depth image must be 2-D")
    if not meters_per_level > 0:
        raise ValueError("meters_per_level must be positive")
    if not np.all(np.isfinite(depth)):
        raise ValueError("depth image contains non-finite values")
    levels = np.clip(np.rint(depth / meters_per_level), 0, PGM_MAXVAL).astype(">u2")
    h, w = depth.shape
    header = f"P5\n# meters_per_level {meters_per_level!r}\n{w} {h}\n{PGM_MAXVAL}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(levels.tobytes())


def _pgm_tokens(blob: bytes, count: int):
    """First ``count`` header tokens, the collected comments and the payload offset."""
    tokens, comments = [], []
    pos = 0
    while len(tokens) < count:
        m = re.compile(rb"\s*(#[^\n]*\n|\S+)").match(blob, pos)
        if m is None:
            raise ValueError("truncated PGM header")
        tok = m.group(1)
        pos = m.end()
        if tok.startswith(b"#"):
            comments.append(tok[1:].decode("ascii", "replace").strip())
        else:
            tokens.append(tok)
    return tokens, comments, pos + 1  # one whitespace byte ends the header


def read_pgm(path, meters_per_level: float | None = None) -> np.ndarray:
    """Read a binary PGM back to meters.

    The scale comes from the ``meters_per_level`` comment unless given. Files
    without either are returned as raw levels.
    """
    with open(path, "rb") as f:
        blob = f.read()
    tokens, comments, offset = _pgm_tokens(blob, 4)
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    size = w * h * np.dtype(dtype).itemsize
    raw = blob[offset : offset + size]
    if len(raw) != size:
        raise ValueError("truncated PGM payload")
    levels = np.frombuffer(raw, dtype=dtype).reshape(h, w).astype(np.float64)
    if meters_per_level is None:
        for c in comments:
            parts = c.split()
            if len(parts) == 2 and parts[0] == "meters_per_level":
                meters_per_level = float(parts[1])
    return levels if meters_per_level is None else levels * meters_per_level


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], rows[1:]

