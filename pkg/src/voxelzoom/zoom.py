"""Coarse-to-fine inference: global pass on a resized volume, then
native-resolution sliding windows inside the predicted region of interest,
stitched and filled back into the global result.

Also provides the multi-view training-sample builder (one resized view
plus seeded random input-sized crops).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .backends import SegmentRequest, run_backend, serialize_if_needed
from .encoders import EMBED_DIM, PromptEmbedding, embed_text, encode_spatial
from .errors import EmptyPrediction, VolumeTooSmall
from .geometry import Triple, VoxelBox
from .prompts import (
    IGNORE,
    IGNORE_COORD,
    BoxPrompt,
    PointPrompt,
    PromptSet,
    RemappedPrompts,
    remap_prompts_global_to_local,
)
from .validation import check_dims
from .volume import LogitsVolume, MaskVolume, Volume, crop, pad_to, resize, unpad

CROP_RETRY_BOUND = 50


@dataclass(frozen=True)
class ZoomConfig:
    """Geometry knobs for the two-stage pipeline."""

    model_input_dims: Triple = (32, 64, 64)
    roi_margin_frac: float = 0.1
    window_overlap_frac: float = 0.25
    mask_threshold: float = 0.5
    stitch: str = "average"
    parallel_windows: int = 1

    def __post_init__(self):
        object.__setattr__(self, "model_input_dims", check_dims(self.model_input_dims))
        if self.roi_margin_frac < 0:
            raise ValueError("roi_margin_frac must be >= 0")
        if not 0 <= self.window_overlap_frac < 1:
            raise ValueError("window_overlap_frac must be in [0, 1)")
        if not 0 < self.mask_threshold < 1:
            raise ValueError("mask_threshold must be in (0, 1)")
        if self.stitch not in ("average", "replace-last"):
            raise ValueError(f"unknown stitch mode {self.stitch!r}")
        if self.parallel_windows < 1:
            raise ValueError("parallel_windows must be >= 1")


@dataclass(frozen=True)
class ZoomTrace:
    """Artifacts of one zoom run: both passes, geometry, and timings.

    roi is the effective fill-back region: the tight envelope of the
    planned windows, which contains the thresholded-prediction box.
    """

    global_logits: LogitsVolume
    roi: VoxelBox | None
    windows: tuple[VoxelBox, ...]
    skipped_windows: tuple[VoxelBox, ...]
    final_logits: LogitsVolume
    degraded_to_global: bool
    timings_ms: dict[str, float] = field(default_factory=dict)


def _scale_coord(c: int, from_n: int, to_n: int, upper: int) -> int:
    scaled = int(np.rint(c * (to_n / from_n)))
    return min(max(scaled, 0), upper)


def rescale_prompts(ps: PromptSet, from_dims: Triple, to_dims: Triple) -> PromptSet:
    """Map prompt coordinates between grids of different dims (nearest voxel)."""
    from_dims = check_dims(from_dims)
    to_dims = check_dims(to_dims)
    if from_dims == to_dims:
        return ps
    point = None
    if ps.point is not None:
        pts = []
        for zyx, label in ps.point.points:
            if label == IGNORE:
                pts.append((IGNORE_COORD, IGNORE))
            else:
                pts.append((
                    tuple(_scale_coord(c, f, t, t - 1)
                          for c, f, t in zip(zyx, from_dims, to_dims)),
                    label,
                ))
        point = PointPrompt(tuple(pts))
    box = None
    if ps.box is not None:
        lo = [_scale_coord(c, f, t, t - 1)
              for c, f, t in zip(ps.box.lo, from_dims, to_dims)]
        hi = [_scale_coord(c, f, t, t)
              for c, f, t in zip(ps.box.hi, from_dims, to_dims)]
        hi = [max(h, l + 1) for l, h in zip(lo, hi)]
        box = BoxPrompt(tuple(lo), tuple(hi))
    return PromptSet(point=point, box=box, text=ps.text, frame=ps.frame)


def _embeddings_for(ps: PromptSet, frame_dims: Triple) -> PromptEmbedding:
    spatial = encode_spatial(ps, frame_dims)
    z_text = embed_text(ps.text, dim=EMBED_DIM) if ps.text is not None else None
    return PromptEmbedding(z_point=spatial.z_point, z_box=spatial.z_box, z_text=z_text)


def make_multiview_samples(
    v: Volume,
    masks: list[MaskVolume],
    cfg: ZoomConfig,
    seed: int,
    n_crops: int = 4,
) -> list[tuple[Volume, list[MaskVolume], str]]:
    """One resized zoom-out view plus seeded random input-sized crops.

    When any mask has foreground, each crop must contain at least one
    foreground voxel: rejected draws are retried up to a bound, then the
    crop is centered on a random foreground voxel.
    """
    input_dims = cfg.model_input_dims
    samples: list[tuple[Volume, list[MaskVolume], str]] = [
        (resize(v, input_dims), [resize(m, input_dims) for m in masks], "zoom-out")
    ]
    if n_crops == 0:
        return samples
    if any(n < w for n, w in zip(v.dims, input_dims)):
        raise VolumeTooSmall(
            f"volume dims {v.dims} smaller than input dims {input_dims}; cannot crop"
        )
    union = None
    for m in masks:
        union = m.bits if union is None else (union | m.bits)
    fg_flat = np.flatnonzero(union) if union is not None else np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    for _ in range(n_crops):
        box = None
        for _attempt in range(CROP_RETRY_BOUND):
            lo = tuple(int(rng.integers(0, n - w + 1)) for n, w in zip(v.dims, input_dims))
            cand = VoxelBox(lo, tuple(l + w for l, w in zip(lo, input_dims)))
            if fg_flat.size == 0 or union[cand.slices()].any():
                box = cand
                break
        if box is None:
            center = np.unravel_index(int(rng.choice(fg_flat)), v.dims)
            lo = tuple(
                min(max(c - w // 2, 0), n - w)
                for c, w, n in zip(center, input_dims, v.dims)
            )
            box = VoxelBox(lo, tuple(l + w for l, w in zip(lo, input_dims)))
        samples.append((crop(v, box), [crop(m, box) for m in masks], "crop"))
    return samples


def infer_global(v: Volume, ps: PromptSet, backend, cfg: ZoomConfig) -> LogitsVolume:
    """Single coarse pass: resize to model input, segment, resize back."""
    resized = resize(v, cfg.model_input_dims)
    local_ps = rescale_prompts(ps, v.dims, cfg.model_input_dims)
    req = SegmentRequest(resized, local_ps, _embeddings_for(local_ps, cfg.model_input_dims))
    out = run_backend(backend, req)
    return resize(out, v.dims)


def infer_resize_only(v: Volume, ps: PromptSet, backend, cfg: ZoomConfig) -> LogitsVolume:
    """The ablation baseline: the coarse pass alone."""
    return infer_global(v, ps, backend, cfg)


def extract_roi(global_logits: LogitsVolume, cfg: ZoomConfig) -> VoxelBox:
    """Bounding box of above-threshold voxels, grown by the margin fraction."""
    above = global_logits.squashed().scores >= cfg.mask_threshold
    if not above.any():
        raise EmptyPrediction("no voxel reaches the mask threshold")
    idx = np.nonzero(above)
    lo = [int(ax.min()) for ax in idx]
    hi = [int(ax.max()) + 1 for ax in idx]
    dims = global_logits.dims
    out_lo, out_hi = [], []
    for l, h, n in zip(lo, hi, dims):
        margin = int(np.rint(cfg.roi_margin_frac * (h - l)))
        out_lo.append(max(0, l - margin))
        out_hi.append(min(n, h + margin))
    return VoxelBox(tuple(out_lo), tuple(out_hi))


def plan_windows(roi: VoxelBox, cfg: ZoomConfig, vol_dims: Triple) -> list[VoxelBox]:
    """Tile the region with input-sized windows.

    Per axis the stride is ceil(window * (1 - overlap)); the last origin is
    clamped so the final window ends exactly at the region edge. A region
    smaller than the window gets one window that may overhang the region
    but never the volume; a volume smaller than the window caps the window
    at the volume extent (the inference step pads).
    """
    vol_dims = check_dims(vol_dims)
    roi.check_within(vol_dims)
    per_axis: list[list[tuple[int, int]]] = []
    for axis in range(3):
        w = cfg.model_input_dims[axis]
        n = vol_dims[axis]
        lo, hi = roi.lo[axis], roi.hi[axis]
        e = hi - lo
        if e >= w:
            stride = math.ceil(w * (1.0 - cfg.window_overlap_frac))
            origins: list[int] = []
            o = 0
            while True:
                if o + w >= e:
                    last = e - w
                    if not origins or origins[-1] != last:
                        origins.append(last)
                    break
                origins.append(o)
                o += stride
            per_axis.append([(lo + o, w) for o in origins])
        else:
            wext = min(w, n)
            origin = max(0, min(lo, n - wext))
            per_axis.append([(origin, wext)])
    out = []
    for oz, dz in per_axis[0]:
        for oy, dy in per_axis[1]:
            for ox, dx in per_axis[2]:
                out.append(VoxelBox((oz, oy, ox), (oz + dz, oy + dy, ox + dx)))
    return out


def _windows_envelope(windows: list[VoxelBox]) -> VoxelBox:
    lo = tuple(min(w.lo[a] for w in windows) for a in range(3))
    hi = tuple(max(w.hi[a] for w in windows) for a in range(3))
    return VoxelBox(lo, hi)


def _infer_window(v: Volume, window: VoxelBox, rp: RemappedPrompts, backend,
                  cfg: ZoomConfig) -> np.ndarray:
    wvol = crop(v, window)
    native_dims = wvol.dims
    if native_dims != cfg.model_input_dims:
        wvol = pad_to(wvol, cfg.model_input_dims)
    req = SegmentRequest(wvol, rp.prompts, _embeddings_for(rp.prompts, cfg.model_input_dims))
    out = run_backend(backend, req)
    if native_dims != cfg.model_input_dims:
        out = unpad(out, native_dims)
    return out.scores


def infer_zoom(v: Volume, ps: PromptSet, backend, cfg: ZoomConfig = ZoomConfig()
               ) -> tuple[LogitsVolume, ZoomTrace]:
    """Full two-stage pipeline; returns final logits and the run trace.

    An empty global prediction degrades gracefully: the global result is
    returned unchanged and the trace notes it.
    """
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    global_logits = infer_global(v, ps, backend, cfg)
    timings["global_ms"] = (time.perf_counter() - t0) * 1000.0

    t1 = time.perf_counter()
    try:
        roi = extract_roi(global_logits, cfg)
    except EmptyPrediction:
        timings["roi_ms"] = (time.perf_counter() - t1) * 1000.0
        trace = ZoomTrace(
            global_logits=global_logits, roi=None, windows=(), skipped_windows=(),
            final_logits=global_logits, degraded_to_global=True, timings_ms=timings,
        )
        return global_logits, trace
    windows = plan_windows(roi, cfg, v.dims)
    envelope = _windows_envelope(windows)
    timings["roi_ms"] = (time.perf_counter() - t1) * 1000.0

    t2 = time.perf_counter()
    global_mask = global_logits.threshold(cfg.mask_threshold)
    remapped = [remap_prompts_global_to_local(ps, w, global_mask) for w in windows]
    live = [(w, rp) for w, rp in zip(windows, remapped) if not rp.skippable]
    skipped = tuple(w for w, rp in zip(windows, remapped) if rp.skippable)

    runner = serialize_if_needed(backend)
    if cfg.parallel_windows > 1 and len(live) > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel_windows) as pool:
            results = list(pool.map(
                lambda pair: _infer_window(v, pair[0], pair[1], runner, cfg), live
            ))
    else:
        results = [_infer_window(v, w, rp, runner, cfg) for w, rp in live]
    timings["windows_ms"] = (time.perf_counter() - t2) * 1000.0

    t3 = time.perf_counter()
    env_extent = envelope.extent
    final_scores = global_logits.scores.copy()
    if cfg.stitch == "average":
        acc = np.zeros(env_extent, dtype=np.float64)
        count = np.zeros(env_extent, dtype=np.int32)
        for (w, _rp), scores in zip(live, results):
            local = w.shifted(tuple(-c for c in envelope.lo))
            acc[local.slices()] += scores.astype(np.float64)
            count[local.slices()] += 1
        covered = count > 0
        stitched = np.where(covered, acc / np.maximum(count, 1), 0.0).astype(np.float32)
    else:
        stitched = np.zeros(env_extent, dtype=np.float32)
        covered = np.zeros(env_extent, dtype=bool)
        for (w, _rp), scores in zip(live, results):
            local = w.shifted(tuple(-c for c in envelope.lo))
            stitched[local.slices()] = scores
            covered[local.slices()] = True
    region = final_scores[envelope.slices()]
    final_scores[envelope.slices()] = np.where(covered, stitched, region)
    final = LogitsVolume(np.clip(final_scores, 0.0, 1.0), v.spacing,
                         global_logits.frame, "probability")
    timings["stitch_ms"] = (time.perf_counter() - t3) * 1000.0

    trace = ZoomTrace(
        global_logits=global_logits, roi=envelope, windows=tuple(windows),
        skipped_windows=skipped, final_logits=final, degraded_to_global=False,
        timings_ms=timings,
    )
    return final, trace


class ZoomSegmenter(BaseEstimator):
    """Estimator facade over the two-stage pipeline.

    predict(volume, prompts) returns the thresholded mask; the full run
    trace of the last prediction is kept in trace_.
    """

    def __init__(self, backend=None, model_input_dims: Triple = (32, 64, 64),
                 roi_margin_frac: float = 0.1, window_overlap_frac: float = 0.25,
                 mask_threshold: float = 0.5, stitch: str = "average",
                 parallel_windows: int = 1, mode: str = "zoom"):
        self.backend = backend
        self.model_input_dims = model_input_dims
        self.roi_margin_frac = roi_margin_frac
        self.window_overlap_frac = window_overlap_frac
        self.mask_threshold = mask_threshold
        self.stitch = stitch
        self.parallel_windows = parallel_windows
        self.mode = mode

    def _config(self) -> ZoomConfig:
        return ZoomConfig(
            model_input_dims=tuple(self.model_input_dims),
            roi_margin_frac=self.roi_margin_frac,
            window_overlap_frac=self.window_overlap_frac,
            mask_threshold=self.mask_threshold,
            stitch=self.stitch,
            parallel_windows=self.parallel_windows,
        )

    def fit(self, X=None, y=None):
        if self.backend is None:
            raise ValueError("ZoomSegmenter needs a backend")
        if self.mode not in ("zoom", "resize"):
            raise ValueError(f"mode must be 'zoom' or 'resize', got {self.mode!r}")
        self.config_ = self._config()
        return self

    def predict(self, volume: Volume, prompts: PromptSet) -> MaskVolume:
        if not hasattr(self, "config_"):
            self.fit()
        cfg = self.config_
        if self.mode == "resize":
            logits = infer_resize_only(volume, prompts, self.backend, cfg)
            self.trace_ = ZoomTrace(
                global_logits=logits, roi=None, windows=(), skipped_windows=(),
                final_logits=logits, degraded_to_global=False, timings_ms={},
            )
        else:
            logits, self.trace_ = infer_zoom(volume, prompts, self.backend, cfg)
        return logits.threshold(cfg.mask_threshold)
