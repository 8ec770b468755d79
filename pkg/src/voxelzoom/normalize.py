"""CT intensity normalization: foreground percentile clipping then z-scoring.

The foreground is every voxel strictly above the volume-wide mean. Clip
bounds are the 0.05th and 99.95th percentiles of that foreground; all
voxels are clamped to those bounds, then shifted and scaled by the mean
and standard deviation of the clamped foreground.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .volume import NormalizationReport, Volume

EPSILON = 1e-8
LOW_QUANTILE = 0.0005
HIGH_QUANTILE = 0.9995


def nearest_rank(sorted_values: np.ndarray, quantile: float) -> float:
    """Nearest-rank percentile: index ceil(q*n) - 1 on ascending values, clamped."""
    n = sorted_values.size
    if n == 0:
        raise ValueError("nearest_rank needs at least one value")
    idx = math.ceil(quantile * n) - 1
    return float(sorted_values[min(max(idx, 0), n - 1)])


def normalize(volume: Volume) -> tuple[Volume, NormalizationReport]:
    """Normalize intensities; returns the new volume and the statistics used.

    A volume with no voxel above its mean (constant input) yields an
    all-zero volume with the empty_foreground flag set instead of an error.
    """
    voxels = volume.voxels.astype(np.float64)
    threshold = float(voxels.mean())
    fg = voxels > threshold
    if not fg.any():
        report = NormalizationReport(
            foreground_threshold=threshold,
            clip_low=threshold,
            clip_high=threshold,
            fg_mean=threshold,
            fg_std=0.0,
            empty_foreground=True,
        )
        return volume.with_voxels(np.zeros(volume.dims, dtype=np.float32)), report

    fg_sorted = np.sort(voxels[fg], kind="stable")
    clip_low = nearest_rank(fg_sorted, LOW_QUANTILE)
    clip_high = nearest_rank(fg_sorted, HIGH_QUANTILE)

    clamped = np.clip(voxels, clip_low, clip_high)
    fg_clamped = clamped[fg]
    fg_mean = float(fg_clamped.mean())
    fg_std = float(fg_clamped.std())

    out = (clamped - fg_mean) / (fg_std + EPSILON)
    report = NormalizationReport(
        foreground_threshold=threshold,
        clip_low=clip_low,
        clip_high=clip_high,
        fg_mean=fg_mean,
        fg_std=fg_std,
    )
    return volume.with_voxels(out.astype(np.float32)), report


class IntensityNormalizer(TransformerMixin, BaseEstimator):
    """Estimator facade over normalize() for pipeline composition.

    fit() records the statistics of the fitted volume in report_;
    transform() normalizes each input independently (the operation is
    per-volume by construction, so fit carries no state into transform).
    """

    def fit(self, X: Volume, y=None):
        _, self.report_ = normalize(X)
        return self

    def transform(self, X: Volume) -> Volume:
        out, _ = normalize(X)
        return out

    def fit_transform(self, X: Volume, y=None) -> Volume:
        out, self.report_ = normalize(X)
        return out
