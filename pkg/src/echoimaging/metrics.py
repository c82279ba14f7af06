"""Reconstruction quality: pixelwise MSE and foreground IOU."""

from __future__ import annotations

import numpy as np

DEFAULT_KAPPA = 0.5


def _pixels(image) -> np.ndarray:
    return np.asarray(getattr(image, "depth", image), dtype=float)


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def mse(reconstruction, truth) -> float:
    """Mean of squared pixel differences; accepts arrays or DepthImages."""
    r, g = _pixels(reconstruction), _pixels(truth)
    _same_shape(r, g)
    return float(np.mean((r - g) ** 2))


def binarize(image, mask, kappa: float = DEFAULT_KAPPA) -> np.ndarray:
    """Foreground pixels: at least ``kappa`` of the largest depth drop below the mask.

    A pixel is foreground when ``mask - image >= kappa * m`` with ``m`` the
    maximum of ``mask - image``. If ``m <= 0`` nothing is closer than the
    background and every pixel is background.
    """
    img, m = _pixels(image), _pixels(mask)
    _same_shape(img, m)
    if not (0 < kappa < 1):
        raise ValueError("kappa must lie in (0, 1)")
    diff = m - img
    peak = diff.max()
    if peak <= 0:
        return np.zeros(diff.shape, dtype=bool)
    return diff >= kappa * peak


def iou(a, b) -> float:
    """Intersection over union of two boolean masks; 1.0 when both are empty."""
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    _same_shape(a, b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def foreground_iou(reconstruction, truth, mask, kappa: float = DEFAULT_KAPPA) -> float:
    return iou(binarize(reconstruction, mask, kappa), binarize(truth, mask, kappa))
