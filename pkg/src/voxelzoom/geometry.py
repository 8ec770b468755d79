"""Voxel boxes and coordinate frames.

All voxel coordinates are (z, y, x) index triples; boxes are half-open
[lo, hi). A Frame records where a grid sits relative to the original
(global) volume so that downstream consumers can reconstruct the crop /
resize / pad chain that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import OutOfBounds

Triple = tuple[int, int, int]


@dataclass(frozen=True)
class VoxelBox:
    """Half-open axis-aligned box in voxel coordinates."""

    lo: Triple
    hi: Triple

    def __post_init__(self):
        if len(self.lo) != 3 or len(self.hi) != 3:
            raise ValueError("box corners must be (z, y, x) triples")
        object.__setattr__(self, "lo", tuple(int(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(int(c) for c in self.hi))
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"degenerate box: lo={self.lo} hi={self.hi}")

    @property
    def extent(self) -> Triple:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def num_voxels(self) -> int:
        d, h, w = self.extent
        return d * h * w

    def slices(self) -> tuple[slice, slice, slice]:
        return tuple(slice(l, h) for l, h in zip(self.lo, self.hi))

    def contains_point(self, zyx) -> bool:
        return all(l <= c < h for c, l, h in zip(zyx, self.lo, self.hi))

    def intersect(self, other: "VoxelBox") -> "VoxelBox | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(h <= l for l, h in zip(lo, hi)):
            return None
        return VoxelBox(lo, hi)

    def shifted(self, offset) -> "VoxelBox":
        return VoxelBox(
            tuple(l + o for l, o in zip(self.lo, offset)),
            tuple(h + o for h, o in zip(self.hi, offset)),
        )

    def check_within(self, dims: Triple) -> None:
        if any(l < 0 for l in self.lo) or any(h > d for h, d in zip(self.hi, dims)):
            raise OutOfBounds(f"box {self.lo}->{self.hi} exceeds dims {dims}")

    @staticmethod
    def full(dims: Triple) -> "VoxelBox":
        return VoxelBox((0, 0, 0), tuple(dims))


@dataclass(frozen=True)
class Frame:
    """Placement of a grid relative to the original global volume.

    kind           "global" for a full-volume grid, "window" for a crop.
    offset         global (z, y, x) of this grid's voxel (0, 0, 0).
    region_extent  extent in global voxels covered by the grid's data,
                   when it differs from the grid dims (set by resizing).
    data_dims      extent of the meaningful part of the grid, when the
                   grid was zero-padded beyond it (set by padding).
    """

    kind: str = "global"
    offset: Triple = (0, 0, 0)
    region_extent: Triple | None = None
    data_dims: Triple | None = None

    def __post_init__(self):
        if self.kind not in ("global", "window"):
            raise ValueError(f"unknown frame kind: {self.kind!r}")
        object.__setattr__(self, "offset", tuple(int(c) for c in self.offset))
        if self.kind == "global" and self.offset != (0, 0, 0):
            raise ValueError("global frame must have zero offset")

    @property
    def is_global(self) -> bool:
        return self.kind == "global"


GLOBAL_FRAME = Frame()
