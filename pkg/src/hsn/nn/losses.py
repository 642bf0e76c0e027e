from __future__ import annotations

import numpy as np

from hsn.core.errors import ShapeMismatch


def _diff(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"Loss inputs differ in shape: {pred.shape} vs {target.shape}")
    return pred - target


def l1_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """mean |pred - target| and its gradient; sign(0) = 0."""
    d = _diff(pred, target)
    return float(np.mean(np.abs(d))), (np.sign(d) / d.size).astype(d.dtype, copy=False)


def l2_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """mean (pred - target)^2 and its gradient."""
    d = _diff(pred, target)
    return float(np.mean(d * d)), (2.0 * d / d.size).astype(d.dtype, copy=False)


LOSSES = {"L1": l1_loss, "L2": l2_loss}
