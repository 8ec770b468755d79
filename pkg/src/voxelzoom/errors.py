"""Exception hierarchy for the voxelzoom engine."""

from __future__ import annotations


class VoxelZoomError(Exception):
    """Base class for all engine errors."""


# --- volume / IO ---

class UnsupportedFormat(VoxelZoomError):
    """File is not a format (or datatype) this engine reads."""


class CorruptHeader(VoxelZoomError):
    """File header is truncated, inconsistent, or has a bad magic."""


class NonFiniteData(VoxelZoomError):
    """Loaded voxel data contains NaN or Inf."""


class OutOfBounds(VoxelZoomError):
    """A box or coordinate lies outside the volume extent."""


class DimMismatch(VoxelZoomError):
    """Two grids that must share dimensions do not."""


# --- prompts ---

class EmptyMask(VoxelZoomError):
    """Mask has no foreground voxels where some are required."""


class InsufficientForeground(VoxelZoomError):
    """Mask has too few candidate voxels for the requested point sample."""


class ProviderUnavailable(VoxelZoomError):
    """Requested text-embedding provider is not registered."""


# --- backends ---

class BackendFailure(VoxelZoomError):
    """A segmentation backend failed to produce a usable result."""


class UnsupportedPromptType(BackendFailure):
    """Request carries a prompt type the backend does not support."""


class NoSpatialPrompt(BackendFailure):
    """Backend needs at least one point or box prompt."""


class AtlasMissing(BackendFailure):
    """Text-only request but no atlas of reference masks is registered."""


class NoOracleMask(BackendFailure):
    """Oracle backend invoked without a registered ground-truth mask."""


class ProtocolViolation(BackendFailure):
    """Remote backend response violates the wire protocol."""


class TransportError(BackendFailure):
    """Remote backend could not be reached."""


class BackendTimeout(TransportError):
    """Remote backend did not answer within the configured timeout."""


# --- pipeline / evaluation ---

class EmptyPrediction(VoxelZoomError):
    """Global inference produced no voxel above the mask threshold."""


class VolumeTooSmall(VoxelZoomError):
    """Volume is smaller than the model input size on some axis."""


class LeakDetected(VoxelZoomError):
    """Identical file content found on both sides of a dataset split."""

    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__(f"content hash shared across split boundary: {self.offenders}")
