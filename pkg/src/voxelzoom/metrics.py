"""Overlap metric and training losses for binary segmentation."""

from __future__ import annotations

import numpy as np

from .validation import check_same_dims
from .volume import LogitsVolume, MaskVolume

BCE_EPS = 1e-7
DICE_EPS = 1e-8


def dice_score(x: MaskVolume, y: MaskVolume) -> float:
    """Dice similarity 2|X∩Y| / (|X|+|Y|); two empty masks score 1.0."""
    check_same_dims(x, y)
    inter = int(np.logical_and(x.bits, y.bits).sum())
    total = x.num_foreground + y.num_foreground
    if total == 0:
        return 1.0
    return 2.0 * inter / total


def _probs(p: LogitsVolume, y: MaskVolume) -> np.ndarray:
    check_same_dims(p, y)
    return p.squashed().scores.astype(np.float64)


def bce_loss(p: LogitsVolume, y: MaskVolume) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    probs = np.clip(_probs(p, y), BCE_EPS, 1.0 - BCE_EPS)
    target = y.bits.astype(np.float64)
    per_voxel = -(target * np.log(probs) + (1.0 - target) * np.log1p(-probs))
    return float(per_voxel.mean())


def dice_loss(p: LogitsVolume, y: MaskVolume) -> float:
    """Soft Dice loss 1 - (2<y,p> + eps) / (|y| + |p| + eps).

    The smoothing term appears in both numerator and denominator so a
    perfect empty prediction scores 0 rather than 1.
    """
    probs = _probs(p, y)
    target = y.bits.astype(np.float64)
    inter = float((probs * target).sum())
    total = float(target.sum()) + float(probs.sum())
    return 1.0 - (2.0 * inter + DICE_EPS) / (total + DICE_EPS)


def combined_loss(p: LogitsVolume, y: MaskVolume) -> float:
    """Sum of bce_loss and dice_loss."""
    return bce_loss(p, y) + dice_loss(p, y)
