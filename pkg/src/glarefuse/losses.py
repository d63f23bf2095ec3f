"""Reference loss formulas for the reconstruction autoencoders (no training code)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import Box

INSIDE_WEIGHT = 1.0 / 0.01
OUTSIDE_WEIGHT = 1.0 / 0.99


def penalty_matrix(width: int, height: int, boxes: Sequence[Box] = ()) -> np.ndarray:
    """Per-pixel weights: 1/0.01 where the pixel centre lies in any box, else 1/0.99.

    Returned as a ``(height, width)`` float array.
    """
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    cy = np.arange(height) + 0.5
    cx = np.arange(width) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    for b in boxes:
        rows = (cy >= b.y_min) & (cy < b.y_max)
        cols = (cx >= b.x_min) & (cx < b.x_max)
        inside |= rows[:, None] & cols[None, :]
    return np.where(inside, INSIDE_WEIGHT, OUTSIDE_WEIGHT)


def masked_mse_loss(pred: np.ndarray, target: np.ndarray, penalty: np.ndarray) -> float:
    """Sum of squared errors weighted elementwise by ``penalty``.

    ``penalty`` broadcasts over leading batch/channel axes; everything is summed.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    try:
        weighted = (pred - target) ** 2 * penalty
    except ValueError as exc:
        raise ValueError(f"penalty shape {np.shape(penalty)} incompatible with {pred.shape}") from exc
    if weighted.shape != pred.shape:
        raise ValueError(f"penalty shape {np.shape(penalty)} incompatible with {pred.shape}")
    return float(weighted.sum())


def smooth_l1(x, beta: float = 1.0):
    """Quadratic below ``beta``, linear above; works on scalars and arrays."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    out = np.where(ax < beta, 0.5 * x * x / beta, ax - 0.5 * beta)
    return float(out) if out.ndim == 0 else out
