"""Volume data model and geometric operations (crop, resize, threshold).

Grids are dense (d, h, w) arrays in z, y, x order with w varying fastest.
All three grid types (intensity Volume, binary MaskVolume, real-valued
LogitsVolume) share geometry: dims, mm spacing, and a coordinate Frame.
Instances are immutable; every operation returns a new grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import OutOfBounds
from .geometry import GLOBAL_FRAME, Frame, Triple, VoxelBox
from .validation import as_voxel_array, check_finite, check_spacing

DEFAULT_SPACING = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Volume:
    """Dense 3D scalar grid of float32 intensities.

    Attributes:
        voxels: (d, h, w) float32 array, read-only.
        spacing: (sd, sh, sw) mm per voxel.
        frame: placement relative to the original global volume.
    """

    voxels: np.ndarray
    spacing: tuple[float, float, float] = DEFAULT_SPACING
    frame: Frame = GLOBAL_FRAME

    def __post_init__(self):
        arr = as_voxel_array(self.voxels, np.shape(self.voxels), np.float32)
        check_finite(arr, "volume voxels")
        object.__setattr__(self, "voxels", arr)
        object.__setattr__(self, "spacing", check_spacing(self.spacing))

    @staticmethod
    def from_flat(flat, dims, spacing=DEFAULT_SPACING, frame=GLOBAL_FRAME) -> "Volume":
        return Volume(as_voxel_array(flat, dims, np.float32), spacing, frame)

    @property
    def dims(self) -> Triple:
        return self.voxels.shape

    def with_voxels(self, voxels, frame: Frame | None = None) -> "Volume":
        return Volume(voxels, self.spacing, self.frame if frame is None else frame)


@dataclass(frozen=True)
class MaskVolume:
    """Binary label grid sharing a Volume's geometry."""

    bits: np.ndarray
    spacing: tuple[float, float, float] = DEFAULT_SPACING
    frame: Frame = GLOBAL_FRAME

    def __post_init__(self):
        arr = as_voxel_array(self.bits, np.shape(self.bits), bool)
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "spacing", check_spacing(self.spacing))

    @property
    def dims(self) -> Triple:
        return self.bits.shape

    @property
    def num_foreground(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def bounding_box(self) -> VoxelBox | None:
        """Tight half-open box around the foreground, or None if empty."""
        if self.is_empty():
            return None
        idx = np.nonzero(self.bits)
        lo = tuple(int(ax.min()) for ax in idx)
        hi = tuple(int(ax.max()) + 1 for ax in idx)
        return VoxelBox(lo, hi)

    def with_bits(self, bits, frame: Frame | None = None) -> "MaskVolume":
        return MaskVolume(bits, self.spacing, self.frame if frame is None else frame)


@dataclass(frozen=True)
class LogitsVolume:
    """Real-valued per-voxel score grid; calibration is 'logit' or 'probability'."""

    scores: np.ndarray
    spacing: tuple[float, float, float] = DEFAULT_SPACING
    frame: Frame = GLOBAL_FRAME
    calibration: str = "probability"

    def __post_init__(self):
        arr = as_voxel_array(self.scores, np.shape(self.scores), np.float32)
        check_finite(arr, "logits")
        if self.calibration not in ("logit", "probability"):
            raise ValueError(f"unknown calibration {self.calibration!r}")
        if self.calibration == "probability":
            lo, hi = float(arr.min()), float(arr.max())
            if lo < 0.0 or hi > 1.0:
                raise ValueError(f"probability scores outside [0,1]: [{lo}, {hi}]")
        object.__setattr__(self, "scores", arr)
        object.__setattr__(self, "spacing", check_spacing(self.spacing))

    @property
    def dims(self) -> Triple:
        return self.scores.shape

    def squashed(self) -> "LogitsVolume":
        """Logistic-squash raw logits into probabilities; no-op if calibrated."""
        if self.calibration == "probability":
            return self
        probs = 1.0 / (1.0 + np.exp(-self.scores.astype(np.float64)))
        return LogitsVolume(probs.astype(np.float32), self.spacing, self.frame, "probability")

    def threshold(self, level: float = 0.5) -> MaskVolume:
        """Binary mask of voxels with probability >= level."""
        probs = self.squashed()
        return MaskVolume(probs.scores >= level, self.spacing, self.frame)

    def with_scores(self, scores, frame: Frame | None = None) -> "LogitsVolume":
        return LogitsVolume(scores, self.spacing,
                            self.frame if frame is None else frame, self.calibration)


@dataclass(frozen=True)
class NormalizationReport:
    """Statistics recorded while normalizing a volume's intensities."""

    foreground_threshold: float
    clip_low: float
    clip_high: float
    fg_mean: float
    fg_std: float
    empty_foreground: bool = False

    def __post_init__(self):
        if self.clip_low > self.clip_high:
            raise ValueError("clip_low must not exceed clip_high")
        if self.fg_std < 0:
            raise ValueError("fg_std must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "foreground_threshold": self.foreground_threshold,
            "clip_low": self.clip_low,
            "clip_high": self.clip_high,
            "fg_mean": self.fg_mean,
            "fg_std": self.fg_std,
            "empty_foreground": self.empty_foreground,
        }


# ---------------------------------------------------------------------------
# geometric operations
# ---------------------------------------------------------------------------

def _grid_array(grid):
    if isinstance(grid, Volume):
        return grid.voxels
    if isinstance(grid, MaskVolume):
        return grid.bits
    if isinstance(grid, LogitsVolume):
        return grid.scores
    raise TypeError(f"not a grid type: {type(grid)!r}")


def _rebuild(grid, arr, frame, spacing=None):
    spacing = grid.spacing if spacing is None else spacing
    if isinstance(grid, Volume):
        return Volume(arr, spacing, frame)
    if isinstance(grid, MaskVolume):
        return MaskVolume(arr, spacing, frame)
    return LogitsVolume(arr, spacing, frame, grid.calibration)


def crop(grid, box: VoxelBox):
    """Extract a sub-grid; result is in a window-local frame.

    The frame offset accumulates so it always points at global coordinates.
    Only valid on grids whose voxels map 1:1 onto global voxels.
    """
    box.check_within(_grid_array(grid).shape)
    src = grid.frame
    if src.region_extent is not None:
        raise ValueError("cannot crop a resized grid; restore native dims first")
    frame = Frame(
        kind="window",
        offset=tuple(o + l for o, l in zip(src.offset, box.lo)),
        region_extent=None,
        data_dims=None,
    )
    arr = _grid_array(grid)[box.slices()].copy()
    return _rebuild(grid, arr, frame)


def _source_coords(n_src: int, n_tgt: int) -> np.ndarray:
    # half-pixel centers: target center j maps to source coordinate
    # (j + 0.5) * n_src / n_tgt - 0.5
    j = np.arange(n_tgt, dtype=np.float64)
    return (j + 0.5) * (n_src / n_tgt) - 0.5


def _trilinear(arr: np.ndarray, target_dims) -> np.ndarray:
    src = arr.astype(np.float64)
    coords = [_source_coords(s, t) for s, t in zip(arr.shape, target_dims)]
    lo_idx, weights = [], []
    for c, n in zip(coords, arr.shape):
        c = np.clip(c, 0.0, n - 1.0)
        i0 = np.floor(c).astype(np.int64)
        i0 = np.minimum(i0, n - 2) if n > 1 else np.zeros_like(i0)
        lo_idx.append(i0)
        weights.append(c - i0)
    iz, iy, ix = np.ix_(lo_idx[0], lo_idx[1], lo_idx[2])
    wz = weights[0][:, None, None]
    wy = weights[1][None, :, None]
    wx = weights[2][None, None, :]
    dz = 1 if arr.shape[0] > 1 else 0
    dy = 1 if arr.shape[1] > 1 else 0
    dx = 1 if arr.shape[2] > 1 else 0
    out = np.zeros(tuple(target_dims), dtype=np.float64)
    for cz, oz in ((1.0 - wz, 0), (wz, dz)):
        for cy, oy in ((1.0 - wy, 0), (wy, dy)):
            for cx, ox in ((1.0 - wx, 0), (wx, dx)):
                out += cz * cy * cx * src[iz + oz, iy + oy, ix + ox]
    return out


def _nearest(arr: np.ndarray, target_dims) -> np.ndarray:
    idx = []
    for s, t in zip(arr.shape, target_dims):
        i = np.floor((np.arange(t, dtype=np.float64) + 0.5) * (s / t)).astype(np.int64)
        idx.append(np.clip(i, 0, s - 1))
    iz, iy, ix = np.ix_(idx[0], idx[1], idx[2])
    return arr[iz, iy, ix]


def resize(grid, target_dims):
    """Resample a grid: trilinear for Volume/LogitsVolume, nearest for MaskVolume.

    Identical target dims return the grid unchanged (bit-exact). The frame
    remembers the pre-resize extent so the covered global region is preserved.
    """
    target_dims = tuple(int(d) for d in target_dims)
    if any(d <= 0 for d in target_dims):
        raise ValueError(f"target dims must be positive, got {target_dims}")
    arr = _grid_array(grid)
    if target_dims == arr.shape:
        return grid
    src = grid.frame
    covered = src.region_extent if src.region_extent is not None else arr.shape
    frame = replace(
        src,
        region_extent=None if covered == target_dims else covered,
        data_dims=None,
    )
    # voxel spacing stretches so the physical extent stays put
    spacing = tuple(s * (n / t) for s, n, t in zip(grid.spacing, arr.shape, target_dims))
    if isinstance(grid, MaskVolume):
        return _rebuild(grid, _nearest(arr, target_dims), frame, spacing)
    out = _trilinear(arr, target_dims)
    if isinstance(grid, LogitsVolume) and grid.calibration == "probability":
        out = np.clip(out, 0.0, 1.0)
    return _rebuild(grid, out.astype(np.float32), frame, spacing)


def pad_to(grid, target_dims):
    """Zero-pad a grid at the high end of each axis up to target dims.

    The frame's data_dims records the meaningful (unpadded) extent.
    """
    target_dims = tuple(int(d) for d in target_dims)
    arr = _grid_array(grid)
    if target_dims == arr.shape:
        return grid
    if any(t < s for t, s in zip(target_dims, arr.shape)):
        raise ValueError(f"cannot pad {arr.shape} down to {target_dims}")
    pad = [(0, t - s) for t, s in zip(target_dims, arr.shape)]
    frame = replace(grid.frame, data_dims=arr.shape)
    return _rebuild(grid, np.pad(arr, pad), frame)


def unpad(grid, data_dims):
    """Inverse of pad_to: drop padding beyond data_dims."""
    data_dims = tuple(int(d) for d in data_dims)
    arr = _grid_array(grid)
    if arr.shape == data_dims:
        return grid
    sl = tuple(slice(0, d) for d in data_dims)
    frame = replace(grid.frame, data_dims=None)
    return _rebuild(grid, arr[sl].copy(), frame)
