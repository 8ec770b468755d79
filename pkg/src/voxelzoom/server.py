"""HTTP service for interactive sessions: upload a volume, view slices,
run prompted segmentations, fetch mask overlays and full masks.

Sessions live in memory under LRU eviction. Each session allows one
in-flight segmentation at a time; concurrent attempts get 409.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .backends import make_backend
from .errors import BackendFailure, VoxelZoomError
from .io import decode_volume, encode_rvol, load_volume
from .metrics import dice_score
from .normalize import normalize
from .prompts import prompt_set_from_json
from .volume import MaskVolume, NormalizationReport, Volume
from .zoom import ZoomConfig, infer_resize_only, infer_zoom

MAX_SESSIONS = 8
DEFAULT_WINDOW_CENTER = 0.0
DEFAULT_WINDOW_WIDTH = 4.0
_AXES = {"z": 0, "y": 1, "x": 2}


@dataclass
class Session:
    session_id: str
    volume: Volume
    report: NormalizationReport
    backend_spec: str
    config: ZoomConfig
    gt_masks: list[tuple[str, MaskVolume]] = field(default_factory=list)
    masks: dict[str, MaskVolume] = field(default_factory=dict)
    mask_meta: dict[str, dict] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    counter: int = 0
    segment_lock: threading.Lock = field(default_factory=threading.Lock)

    def make_backend(self):
        gt = self.gt_masks[0][1] if self.gt_masks else None
        atlas = {name: m for name, m in self.gt_masks if name}
        return make_backend(self.backend_spec, self.config.model_input_dims,
                            gt=gt, atlas=atlas or None)


class SessionStore:
    """Thread-safe LRU map of live sessions."""

    def __init__(self, capacity: int = MAX_SESSIONS):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.session_id] = session
            self._sessions.move_to_end(session.session_id)
            while len(self._sessions) > self.capacity:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is not None:
                self._sessions.move_to_end(session_id)
            return session

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)


def mask_slice_spans(bits: np.ndarray, axis: int, index: int) -> list[list[int]]:
    """Row-wise run-length spans [row, start, length] of one mask slice."""
    plane = np.take(bits, index, axis=axis)
    spans: list[list[int]] = []
    for row in range(plane.shape[0]):
        line = plane[row]
        if not line.any():
            continue
        padded = np.concatenate([[False], line, [False]])
        flips = np.flatnonzero(padded[1:] != padded[:-1])
        for start, stop in zip(flips[::2], flips[1::2]):
            spans.append([int(row), int(start), int(stop - start)])
    return spans


def render_slice_png(volume: Volume, axis: int, index: int,
                     wc: float, ww: float) -> bytes:
    plane = np.take(volume.voxels, index, axis=axis).astype(np.float64)
    low = wc - ww / 2.0
    scaled = np.clip((plane - low) / ww, 0.0, 1.0)
    img = Image.fromarray((scaled * 255.0 + 0.5).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


# JSON schemas published for response validation in tests and clients.
_ROI_SCHEMA = {
    "type": ["object", "null"],
    "properties": {
        "lo": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
        "hi": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
    },
    "required": ["lo", "hi"],
}

SCHEMAS = {
    "session_created": {
        "type": "object",
        "properties": {
            "session_id": {"type": "string"},
            "dims": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
            "spacing": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        },
        "required": ["session_id", "dims", "spacing"],
    },
    "session_info": {
        "type": "object",
        "properties": {
            "session_id": {"type": "string"},
            "dims": {"type": "array", "items": {"type": "integer"}},
            "spacing": {"type": "array", "items": {"type": "number"}},
            "backend": {"type": "string"},
            "normalization": {"type": "object"},
            "masks": {"type": "array", "items": {"type": "string"}},
            "history": {"type": "array"},
        },
        "required": ["session_id", "dims", "spacing", "backend", "normalization",
                     "masks", "history"],
    },
    "segment_response": {
        "type": "object",
        "properties": {
            "mask_id": {"type": "string"},
            "mode": {"type": "string", "enum": ["zoom", "resize"]},
            "roi": _ROI_SCHEMA,
            "timings_ms": {"type": "object"},
            "dice": {"type": ["number", "null"]},
            "note": {"type": ["string", "null"]},
            "num_foreground": {"type": "integer"},
        },
        "required": ["mask_id", "mode", "roi", "timings_ms", "dice", "note",
                     "num_foreground"],
    },
    "mask_slice": {
        "type": "object",
        "properties": {
            "axis": {"type": "string", "enum": ["z", "y", "x"]},
            "index": {"type": "integer"},
            "rows": {"type": "integer"},
            "cols": {"type": "integer"},
            "spans": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "integer"},
                          "minItems": 3, "maxItems": 3},
            },
        },
        "required": ["axis", "index", "rows", "cols", "spans"],
    },
}


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(default_backend: str = "fh", config: ZoomConfig | None = None,
               max_sessions: int = MAX_SESSIONS) -> FastAPI:
    app = FastAPI(title="voxelzoom")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    store = SessionStore(max_sessions)
    app.state.sessions = store
    base_config = config if config is not None else ZoomConfig()

    def _load_gt(entry) -> tuple[str, MaskVolume]:
        if isinstance(entry, str):
            path, name = entry, ""
        else:
            path, name = entry["path"], entry.get("name", "")
        vol = load_volume(path)
        return name, MaskVolume(vol.voxels >= 0.5, vol.spacing)

    @app.post("/sessions")
    async def create_session(request: Request):
        content_type = request.headers.get("content-type", "")
        backend_spec = default_backend
        cfg = base_config
        gt_entries = []
        try:
            if content_type.startswith("application/json"):
                body = json.loads(await request.body())
                volume = load_volume(body["path"])
                backend_spec = body.get("backend", default_backend)
                overrides = {
                    key: body[key]
                    for key in ("model_input_dims", "roi_margin_frac",
                                "window_overlap_frac", "mask_threshold",
                                "stitch", "parallel_windows")
                    if key in body
                }
                if "model_input_dims" in overrides:
                    overrides["model_input_dims"] = tuple(overrides["model_input_dims"])
                if overrides:
                    cfg = replace(cfg, **overrides)
                gt_entries = body.get("gt", [])
            else:
                volume = decode_volume(await request.body())
        except (VoxelZoomError, KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
            return _error(400, f"cannot load volume: {exc}")
        normalized, report = normalize(volume)
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            volume=normalized,
            report=report,
            backend_spec=backend_spec,
            config=cfg,
        )
        try:
            session.gt_masks = [_load_gt(e) for e in gt_entries]
        except (VoxelZoomError, KeyError, ValueError, OSError) as exc:
            return _error(400, f"cannot load reference mask: {exc}")
        store.add(session)
        return {
            "session_id": session.session_id,
            "dims": list(volume.dims),
            "spacing": list(volume.spacing),
        }

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        return {
            "session_id": session.session_id,
            "dims": list(session.volume.dims),
            "spacing": list(session.volume.spacing),
            "backend": session.backend_spec,
            "normalization": session.report.to_dict(),
            "masks": list(session.masks),
            "history": list(session.history),
        }

    def _resolve_slice(session_id: str, axis: str, index: int):
        session = store.get(session_id)
        if session is None:
            return None, _error(404, "unknown session")
        if axis not in _AXES:
            return None, _error(422, f"axis must be one of z, y, x; got {axis!r}")
        extent = session.volume.dims[_AXES[axis]]
        if not 0 <= index < extent:
            return None, _error(416, f"index {index} outside [0, {extent})")
        return session, None

    @app.get("/sessions/{session_id}/slice")
    def volume_slice(session_id: str, axis: str = "z", index: int = 0,
                     wc: float = DEFAULT_WINDOW_CENTER,
                     ww: float = DEFAULT_WINDOW_WIDTH):
        session, err = _resolve_slice(session_id, axis, index)
        if err is not None:
            return err
        if ww <= 0:
            return _error(422, "window width must be positive")
        png = render_slice_png(session.volume, _AXES[axis], index, wc, ww)
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{session_id}/masks/{mask_id}/slice")
    def mask_slice(session_id: str, mask_id: str, axis: str = "z", index: int = 0):
        session, err = _resolve_slice(session_id, axis, index)
        if err is not None:
            return err
        mask = session.masks.get(mask_id)
        if mask is None:
            return _error(404, "unknown mask")
        ax = _AXES[axis]
        plane_dims = [d for i, d in enumerate(mask.dims) if i != ax]
        return {
            "axis": axis,
            "index": index,
            "rows": plane_dims[0],
            "cols": plane_dims[1],
            "spans": mask_slice_spans(mask.bits, ax, index),
        }

    @app.get("/sessions/{session_id}/masks/{mask_id}/volume")
    def mask_volume(session_id: str, mask_id: str):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        mask = session.masks.get(mask_id)
        if mask is None:
            return _error(404, "unknown mask")
        as_volume = Volume(mask.bits.astype(np.float32), mask.spacing)
        return Response(content=encode_rvol(as_volume),
                        media_type="application/octet-stream")

    @app.post("/sessions/{session_id}/segment")
    async def segment(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        try:
            body = json.loads(await request.body())
            mode = body.get("mode", "zoom")
            if mode not in ("zoom", "resize"):
                raise ValueError(f"mode must be 'zoom' or 'resize', got {mode!r}")
            prompts = prompt_set_from_json(body["prompts"])
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            return _error(422, f"invalid prompts: {exc}")
        if not session.segment_lock.acquire(blocking=False):
            return _error(409, "a segmentation is already running for this session")
        try:
            backend = session.make_backend()
            note = None
            roi = None
            if mode == "resize":
                logits = infer_resize_only(session.volume, prompts, backend,
                                           session.config)
                timings: dict[str, float] = {}
            else:
                logits, trace = infer_zoom(session.volume, prompts, backend,
                                           session.config)
                timings = trace.timings_ms
                if trace.degraded_to_global:
                    note = "global-only: empty global prediction"
                elif trace.roi is not None:
                    roi = {"lo": list(trace.roi.lo), "hi": list(trace.roi.hi)}
            mask = logits.threshold(session.config.mask_threshold)
            session.counter += 1
            mask_id = f"m{session.counter}"
            session.masks[mask_id] = mask
            dice = None
            if session.gt_masks:
                dice = max(dice_score(mask, gt) for _name, gt in session.gt_masks)
            session.mask_meta[mask_id] = {"mode": mode, "roi": roi, "dice": dice}
            session.history.append({"prompts": body["prompts"], "mode": mode,
                                    "mask_id": mask_id})
        except BackendFailure as exc:
            return _error(502, f"backend failure: {exc}")
        except VoxelZoomError as exc:
            return _error(422, f"cannot segment: {exc}")
        finally:
            session.segment_lock.release()
        return {
            "mask_id": mask_id,
            "mode": mode,
            "roi": roi,
            "timings_ms": timings,
            "dice": dice,
            "note": note,
            "num_foreground": mask.num_foreground,
        }

    return app
