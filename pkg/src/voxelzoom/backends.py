"""Segmentation backends: the request/response contract, two deterministic
built-ins, and an HTTP client for plugging in a served model.

A backend consumes a volume already shaped to its declared input dims plus
a prompt set and returns per-voxel scores. run_backend enforces the
contract on both sides and squashes raw logits into probabilities so the
rest of the pipeline can threshold at a fixed level.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass

import httpx
import numpy as np

from .encoders import PromptEmbedding
from .errors import (
    AtlasMissing,
    BackendFailure,
    BackendTimeout,
    DimMismatch,
    NoOracleMask,
    NoSpatialPrompt,
    OutOfBounds,
    ProtocolViolation,
    TransportError,
    UnsupportedPromptType,
)
from .fh import FhParams, fh_segment
from .geometry import Frame, Triple, VoxelBox
from .io import encode_rvol
from .prompts import NEGATIVE, POSITIVE, PromptSet, prompt_set_to_json
from .validation import check_dims
from .volume import LogitsVolume, MaskVolume, Volume, crop, pad_to, resize

DEFAULT_INPUT_DIMS = (32, 64, 64)
ORACLE_GRID = 16
BOX_CONTAINMENT = 0.5
REMOTE_TIMEOUT_S = 120.0


@dataclass(frozen=True)
class BackendInfo:
    """What a backend accepts: its name, input shape, and prompt kinds."""

    name: str
    input_dims: Triple
    supports: frozenset[str] = frozenset({"point", "box", "text"})
    single_flight: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_dims", check_dims(self.input_dims))
        unknown = set(self.supports) - {"point", "box", "text"}
        if unknown:
            raise ValueError(f"unknown prompt kinds {sorted(unknown)}")
        object.__setattr__(self, "supports", frozenset(self.supports))


@dataclass(frozen=True)
class SegmentRequest:
    """One backend invocation: shaped volume, prompts, optional embeddings."""

    volume: Volume
    prompts: PromptSet
    embeddings: PromptEmbedding | None = None


def run_backend(backend, req: SegmentRequest) -> LogitsVolume:
    """Dispatch a request with contract checks on both sides.

    Rejects shape and prompt-kind violations before the call; after it,
    validates output dims, squashes raw logits, and returns probabilities.
    """
    info = backend.info
    if req.volume.dims != info.input_dims:
        raise DimMismatch(
            f"backend {info.name} expects dims {info.input_dims}, got {req.volume.dims}"
        )
    unsupported = req.prompts.kinds - info.supports
    if unsupported:
        raise UnsupportedPromptType(
            f"backend {info.name} does not support {sorted(unsupported)} prompts"
        )
    out = backend.segment(req)
    if not isinstance(out, LogitsVolume):
        raise BackendFailure(f"backend {info.name} returned {type(out)!r}")
    if out.dims != info.input_dims:
        raise BackendFailure(
            f"backend {info.name} returned dims {out.dims}, expected {info.input_dims}"
        )
    return out.squashed()


def mask_in_frame(mask: MaskVolume, frame: Frame, grid_dims: Triple) -> MaskVolume:
    """Reproduce a global-frame mask in a request frame.

    The frame metadata encodes the crop / resize / pad chain that shaped
    the request volume; the same chain is applied to the mask (nearest
    resampling keeps it binary).
    """
    grid_dims = check_dims(grid_dims)
    data_extent = frame.data_dims if frame.data_dims is not None else grid_dims
    covered = frame.region_extent if frame.region_extent is not None else data_extent
    box = VoxelBox(frame.offset, tuple(o + c for o, c in zip(frame.offset, covered)))
    box.check_within(mask.dims)
    out = crop(mask, box)
    out = resize(out, data_extent)
    if data_extent != grid_dims:
        out = pad_to(out, grid_dims)
    return out


def _probability_mask(bits: np.ndarray, like: Volume) -> LogitsVolume:
    return LogitsVolume(bits.astype(np.float32), like.spacing, like.frame, "probability")


class FhBackend:
    """Deterministic backend: graph segmentation plus prompt-driven
    component selection.

    Positive points and sufficiently box-covered components are selected,
    text picks the best atlas match, negative points veto their components.
    """

    def __init__(
        self,
        input_dims: Triple = DEFAULT_INPUT_DIMS,
        params: FhParams | None = None,
        atlas: dict[str, MaskVolume] | None = None,
        containment: float = BOX_CONTAINMENT,
    ):
        # sigma 0 keeps piecewise-constant fixtures exactly separable
        self.params = params if params is not None else FhParams(k=1.0, sigma=0.0, min_size=0)
        self.atlas = dict(atlas) if atlas else {}
        self.containment = containment
        self._info = BackendInfo("fh", input_dims)

    @property
    def info(self) -> BackendInfo:
        return self._info

    def _text_component(self, req: SegmentRequest, labeling_grid: np.ndarray,
                        num_components: int) -> int | None:
        name = req.prompts.text.raw
        ref = self.atlas.get(name)
        if ref is None:
            return None
        local = mask_in_frame(ref, req.volume.frame, req.volume.dims)
        best, best_dice = None, 0.0
        for cid in range(num_components):
            comp = labeling_grid == cid
            inter = int(np.logical_and(comp, local.bits).sum())
            total = int(comp.sum()) + local.num_foreground
            d = 2.0 * inter / total if total else 0.0
            if d > best_dice:
                best, best_dice = cid, d
        return best

    def segment(self, req: SegmentRequest) -> LogitsVolume:
        ps = req.prompts
        active = ps.point.active() if ps.point is not None else []
        has_spatial = bool(active) or ps.box is not None
        if not has_spatial:
            if ps.text is None:
                raise NoSpatialPrompt("fh backend needs a point or box prompt")
            if ps.text.raw not in self.atlas:
                raise AtlasMissing(
                    f"text-only prompt {ps.text.raw!r} needs a registered atlas mask"
                )

        labeling = fh_segment(req.volume, self.params)
        grid = labeling.grid
        dims = req.volume.dims

        selected: set[int] = set()
        vetoed: set[int] = set()
        for zyx, label in active:
            if any(c >= d for c, d in zip(zyx, dims)):
                raise OutOfBounds(f"point {zyx} outside volume dims {dims}")
            cid = int(grid[zyx])
            if label == POSITIVE:
                selected.add(cid)
            elif label == NEGATIVE:
                vetoed.add(cid)

        if ps.box is not None:
            vb = ps.box.as_box()
            vb.check_within(dims)
            in_box = np.bincount(grid[vb.slices()].ravel(), minlength=labeling.num_components)
            for cid in range(labeling.num_components):
                size = labeling.sizes[cid]
                if size and in_box[cid] / size >= self.containment:
                    selected.add(cid)

        if ps.text is not None:
            match = self._text_component(req, grid, labeling.num_components)
            if match is not None:
                selected.add(match)

        keep = selected - vetoed
        bits = np.isin(grid, sorted(keep)) if keep else np.zeros(dims, dtype=bool)
        return _probability_mask(bits, req.volume)


class OracleBackend:
    """Test backend that answers from a known reference mask.

    The mask is reconstructed in the request frame and then degraded
    through a coarse internal grid, emulating a model whose accuracy is
    capped by input resolution: full-volume requests lose detail, tight
    native-resolution crops survive.
    """

    def __init__(self, gt: MaskVolume | None, input_dims: Triple = DEFAULT_INPUT_DIMS,
                 grid: int = ORACLE_GRID):
        if grid < 1:
            raise ValueError(f"degradation grid must be >= 1, got {grid}")
        self.gt = gt
        self.grid = int(grid)
        self._info = BackendInfo("oracle", input_dims)

    @property
    def info(self) -> BackendInfo:
        return self._info

    def segment(self, req: SegmentRequest) -> LogitsVolume:
        if self.gt is None:
            raise NoOracleMask("no reference mask registered for the oracle backend")
        local = mask_in_frame(self.gt, req.volume.frame, req.volume.dims)
        g = (self.grid, self.grid, self.grid)
        degraded = resize(resize(local, g), local.dims)
        return _probability_mask(degraded.bits, req.volume)


class RemoteBackend:
    """HTTP client backend speaking the /v1/segment wire protocol."""

    def __init__(self, base_url: str, input_dims: Triple = DEFAULT_INPUT_DIMS,
                 supports: frozenset[str] = frozenset({"point", "box", "text"}),
                 timeout_s: float = REMOTE_TIMEOUT_S):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._info = BackendInfo("remote", input_dims, supports)

    @property
    def info(self) -> BackendInfo:
        return self._info

    def _embedding_payload(self, emb: PromptEmbedding | None) -> dict:
        if emb is None:
            return {}
        out = {}
        for key, vec in (("z_point", emb.z_point), ("z_box", emb.z_box),
                         ("z_text", emb.z_text)):
            if vec is not None:
                out[key] = [float(x) for x in vec]
        return out

    def segment(self, req: SegmentRequest) -> LogitsVolume:
        payload = {
            "volume": base64.b64encode(encode_rvol(req.volume)).decode("ascii"),
            "prompts": prompt_set_to_json(req.prompts),
            "embeddings": self._embedding_payload(req.embeddings),
        }
        try:
            resp = httpx.post(f"{self.base_url}/v1/segment", json=payload,
                              timeout=self.timeout_s)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"remote backend timed out after {self.timeout_s}s") from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"remote backend transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"remote backend returned HTTP {resp.status_code}")
        try:
            body = resp.json()
            dims = tuple(int(d) for d in body["dims"])
            calibration = body["calibration"]
            raw = base64.b64decode(body["scores"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolViolation(f"malformed remote response: {exc}") from exc
        if dims != req.volume.dims:
            raise ProtocolViolation(
                f"remote returned dims {dims}, expected {req.volume.dims}"
            )
        if calibration not in ("logit", "probability"):
            raise ProtocolViolation(f"unknown calibration {calibration!r}")
        n = dims[0] * dims[1] * dims[2]
        if len(raw) != 4 * n:
            raise ProtocolViolation(f"score payload holds {len(raw)} bytes, expected {4 * n}")
        scores = np.frombuffer(raw, dtype="<f4").reshape(dims)
        if not np.isfinite(scores).all():
            raise ProtocolViolation("remote scores contain non-finite values")
        try:
            return LogitsVolume(scores.astype(np.float32), req.volume.spacing,
                                req.volume.frame, calibration)
        except ValueError as exc:
            raise ProtocolViolation(str(exc)) from exc


class _SerializedBackend:
    """Wrapper that funnels segment calls through a lock for backends
    declaring single-flight."""

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()

    @property
    def info(self) -> BackendInfo:
        return self._inner.info

    def segment(self, req: SegmentRequest) -> LogitsVolume:
        with self._lock:
            return self._inner.segment(req)


def serialize_if_needed(backend):
    """Honor a backend's single-flight declaration."""
    if backend.info.single_flight:
        return _SerializedBackend(backend)
    return backend


def make_backend(spec: str, input_dims: Triple, gt: MaskVolume | None = None,
                 atlas: dict[str, MaskVolume] | None = None):
    """Build a backend from its CLI/HTTP spec string.

    Accepted: "fh", "oracle", or "remote:<base-url>".
    """
    if spec == "fh":
        return FhBackend(input_dims=input_dims, atlas=atlas)
    if spec == "oracle":
        return OracleBackend(gt, input_dims=input_dims)
    if spec.startswith("remote:"):
        url = spec[len("remote:"):]
        if not url:
            raise ValueError("remote backend needs a URL: remote:<base-url>")
        return RemoteBackend(url, input_dims=input_dims)
    raise ValueError(f"unknown backend {spec!r}; expected fh, oracle, or remote:<url>")
