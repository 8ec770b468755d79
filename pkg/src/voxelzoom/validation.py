"""Input validation helpers shared across the engine."""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, NonFiniteData


def check_dims(dims) -> tuple[int, int, int]:
    """Validate and canonicalize a (d, h, w) triple of positive ints."""
    if len(dims) != 3:
        raise ValueError(f"dims must be a (d, h, w) triple, got {dims!r}")
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise ValueError(f"dims must be positive, got {dims}")
    return dims


def check_spacing(spacing) -> tuple[float, float, float]:
    if len(spacing) != 3:
        raise ValueError(f"spacing must be a (sd, sh, sw) triple, got {spacing!r}")
    spacing = tuple(float(s) for s in spacing)
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise ValueError(f"spacing components must be positive, got {spacing}")
    return spacing


def check_finite(arr: np.ndarray, what: str = "data") -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteData(f"{what} contains NaN or Inf")


def check_same_dims(a, b) -> None:
    if tuple(a.dims) != tuple(b.dims):
        raise DimMismatch(f"dims differ: {tuple(a.dims)} vs {tuple(b.dims)}")


def as_voxel_array(values, dims, dtype) -> np.ndarray:
    """Coerce values to a read-only (d, h, w) array of the given dtype."""
    dims = check_dims(dims)
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim == 1:
        if arr.size != dims[0] * dims[1] * dims[2]:
            raise ValueError(f"got {arr.size} voxels for dims {dims}")
        arr = arr.reshape(dims)
    elif arr.shape != dims:
        raise ValueError(f"array shape {arr.shape} does not match dims {dims}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr
