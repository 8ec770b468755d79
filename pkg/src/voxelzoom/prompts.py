"""Prompt data model, prompt generation from masks, and global-to-local
remapping for windowed inference.

Spatial coordinates are (z, y, x) voxel indices in the frame the PromptSet
is tagged with. Point lists have fixed length P; unused slots hold ignore
points with sentinel coordinates (-1, -1, -1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyMask, InsufficientForeground
from .geometry import GLOBAL_FRAME, Frame, Triple, VoxelBox
from .volume import MaskVolume

POINT_LIST_LENGTH = 6
IGNORE_COORD = (-1, -1, -1)
DEFAULT_JITTER_FRAC = 0.05
BOX_MERGE_IOU = 0.9
TEXT_TEMPLATE = "A computerized tomography of a "

POSITIVE = "pos"
NEGATIVE = "neg"
IGNORE = "ignore"
_LABELS = (POSITIVE, NEGATIVE, IGNORE)


@dataclass(frozen=True)
class PointPrompt:
    """Fixed-length list of labeled click points."""

    points: tuple[tuple[Triple, str], ...]

    def __post_init__(self):
        pts = []
        for zyx, label in self.points:
            if label not in _LABELS:
                raise ValueError(f"unknown point label {label!r}")
            zyx = tuple(int(c) for c in zyx)
            if label == IGNORE:
                if zyx != IGNORE_COORD:
                    raise ValueError(f"ignore points must sit at {IGNORE_COORD}, got {zyx}")
            elif any(c < 0 for c in zyx):
                raise ValueError(f"negative coordinate in {label} point {zyx}")
            pts.append((zyx, label))
        object.__setattr__(self, "points", tuple(pts))

    @staticmethod
    def build(points, length: int = POINT_LIST_LENGTH) -> "PointPrompt":
        """Pad a short list of (zyx, label) pairs with ignore slots."""
        points = list(points)
        if len(points) > length:
            raise ValueError(f"{len(points)} points exceed list length {length}")
        points += [(IGNORE_COORD, IGNORE)] * (length - len(points))
        return PointPrompt(tuple(points))

    def active(self) -> list[tuple[Triple, str]]:
        return [(zyx, lbl) for zyx, lbl in self.points if lbl != IGNORE]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BoxPrompt:
    """Half-open voxel box prompt, six coordinates total."""

    lo: Triple
    hi: Triple

    def __post_init__(self):
        box = VoxelBox(self.lo, self.hi)
        object.__setattr__(self, "lo", box.lo)
        object.__setattr__(self, "hi", box.hi)

    def as_box(self) -> VoxelBox:
        return VoxelBox(self.lo, self.hi)


@dataclass(frozen=True)
class TextPrompt:
    """Category phrase plus the fixed sentence fed to text encoders."""

    raw: str
    templated: str = ""

    def __post_init__(self):
        raw = self.raw.strip()
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "templated", TEXT_TEMPLATE + raw)


@dataclass(frozen=True)
class PromptSet:
    """One or more prompts sharing a coordinate frame."""

    point: PointPrompt | None = None
    box: BoxPrompt | None = None
    text: TextPrompt | None = None
    frame: Frame = GLOBAL_FRAME

    def __post_init__(self):
        if self.point is None and self.box is None and self.text is None:
            raise ValueError("a PromptSet needs at least one prompt")

    @property
    def kinds(self) -> frozenset[str]:
        present = []
        if self.point is not None:
            present.append("point")
        if self.box is not None:
            present.append("box")
        if self.text is not None:
            present.append("text")
        return frozenset(present)


def gen_point_prompt(
    mask: MaskVolume,
    n_pos: int,
    n_neg: int,
    rng_seed: int,
    length: int = POINT_LIST_LENGTH,
) -> PointPrompt:
    """Sample labeled points from a mask: positives inside, negatives outside.

    Sampling is uniform without replacement and fully determined by the seed.
    """
    if n_pos < 0 or n_neg < 0 or n_pos + n_neg > length:
        raise ValueError(f"cannot fit {n_pos}+{n_neg} points in a list of {length}")
    rng = np.random.default_rng(rng_seed)
    flat = mask.bits.ravel()
    picks: list[tuple[Triple, str]] = []
    for count, wanted, label in ((n_pos, flat, POSITIVE), (n_neg, ~flat, NEGATIVE)):
        if count == 0:
            continue
        candidates = np.flatnonzero(wanted)
        if candidates.size < count:
            raise InsufficientForeground(
                f"need {count} {label} candidates, mask offers {candidates.size}"
            )
        chosen = rng.choice(candidates, size=count, replace=False)
        for idx in np.sort(chosen):
            picks.append((np.unravel_index(int(idx), mask.dims), label))
    return PointPrompt.build(picks, length)


def gen_box_prompt(mask: MaskVolume, jitter_frac: float = DEFAULT_JITTER_FRAC,
                   rng_seed: int = 0) -> BoxPrompt:
    """Tight bounding box of the mask with per-face random jitter.

    Each of the six faces moves by a seeded uniform draw within
    +/- jitter_frac of that axis's box extent, rounded to the nearest voxel
    and clamped to the volume; axes that would collapse fall back to the
    tight box.
    """
    if not 0 <= jitter_frac < 0.5:
        raise ValueError(f"jitter_frac must be in [0, 0.5), got {jitter_frac}")
    bbox = mask.bounding_box()
    if bbox is None:
        raise EmptyMask("cannot build a box prompt from an empty mask")
    if jitter_frac == 0:
        return BoxPrompt(bbox.lo, bbox.hi)
    rng = np.random.default_rng(rng_seed)
    lo, hi = [], []
    for axis in range(3):
        side = bbox.hi[axis] - bbox.lo[axis]
        span = jitter_frac * side
        l = bbox.lo[axis] + int(np.rint(rng.uniform(-span, span)))
        h = bbox.hi[axis] + int(np.rint(rng.uniform(-span, span)))
        l = max(0, l)
        h = min(mask.dims[axis], h)
        if h <= l:
            l, h = bbox.lo[axis], bbox.hi[axis]
        lo.append(l)
        hi.append(h)
    return BoxPrompt(tuple(lo), tuple(hi))


def merge_covered_masks(box: BoxPrompt, target: MaskVolume,
                        others: list[MaskVolume]) -> MaskVolume:
    """Union into target every other mask the box covers almost exactly.

    Coverage is intersection-over-union between the box voxel set and the
    candidate mask; strictly above 0.9 merges.
    """
    region = np.zeros(target.dims, dtype=bool)
    vb = box.as_box()
    vb.check_within(target.dims)
    region[vb.slices()] = True
    merged = target.bits.copy()
    for other in others:
        if other.dims != target.dims:
            raise DimMismatch(f"mask dims {other.dims} differ from target {target.dims}")
        inter = np.logical_and(region, other.bits).sum()
        union = np.logical_or(region, other.bits).sum()
        if union > 0 and inter / union > BOX_MERGE_IOU:
            merged |= other.bits
    return target.with_bits(merged)


@dataclass(frozen=True)
class RemappedPrompts:
    """Window-local prompts plus whether the window can be skipped."""

    prompts: PromptSet | None
    skippable: bool


def remap_prompts_global_to_local(
    ps: PromptSet, window: VoxelBox, global_pred: MaskVolume
) -> RemappedPrompts:
    """Carry a global prompt set into a window's local coordinates.

    Text survives unchanged. Points translate when inside the window and
    become ignore slots otherwise. The box is always rebuilt as the tight
    bounding box of the global prediction restricted to the window; if
    that restriction is empty the window is skippable.
    """
    window.check_within(global_pred.dims)
    local_frame = Frame(kind="window", offset=window.lo)

    point = None
    if ps.point is not None:
        pts = []
        for zyx, label in ps.point.points:
            if label != IGNORE and window.contains_point(zyx):
                local = tuple(c - o for c, o in zip(zyx, window.lo))
                pts.append((local, label))
            else:
                pts.append((IGNORE_COORD, IGNORE))
        point = PointPrompt(tuple(pts))

    inside = global_pred.bits[window.slices()]
    box = None
    skippable = False
    if inside.any():
        idx = np.nonzero(inside)
        lo = tuple(int(ax.min()) for ax in idx)
        hi = tuple(int(ax.max()) + 1 for ax in idx)
        box = BoxPrompt(lo, hi)
    else:
        skippable = True

    if point is None and box is None and ps.text is None:
        return RemappedPrompts(None, skippable)
    return RemappedPrompts(
        PromptSet(point=point, box=box, text=ps.text, frame=local_frame), skippable
    )


# ---------------------------------------------------------------------------
# JSON wire form
# ---------------------------------------------------------------------------

def prompt_set_to_json(ps: PromptSet) -> dict:
    """Wire-format dict; ignore slots are dropped from the point list."""
    out: dict = {}
    if ps.text is not None:
        out["text"] = ps.text.raw
    if ps.point is not None:
        out["points"] = [
            {"zyx": list(zyx), "label": lbl} for zyx, lbl in ps.point.active()
        ]
    if ps.box is not None:
        out["box"] = {"lo": list(ps.box.lo), "hi": list(ps.box.hi)}
    return out


def prompt_set_from_json(obj: dict, frame: Frame = GLOBAL_FRAME,
                         length: int = POINT_LIST_LENGTH) -> PromptSet:
    point = None
    if obj.get("points"):
        pts = []
        for entry in obj["points"]:
            label = entry["label"]
            if label not in (POSITIVE, NEGATIVE):
                raise ValueError(f"point label must be 'pos' or 'neg', got {label!r}")
            pts.append((tuple(entry["zyx"]), label))
        point = PointPrompt.build(pts, length)
    box = None
    if obj.get("box"):
        box = BoxPrompt(tuple(obj["box"]["lo"]), tuple(obj["box"]["hi"]))
    text = None
    if obj.get("text") is not None:
        text = TextPrompt(obj["text"])
    return PromptSet(point=point, box=box, text=text, frame=frame)
