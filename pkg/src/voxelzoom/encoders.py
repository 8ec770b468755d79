"""Prompt encoders: Fourier features for spatial prompts and a pluggable
text-embedding provider registry.

The spatial encoder projects [0,1]-normalized coordinates through a fixed
Gaussian matrix and concatenates sine and cosine halves. The built-in text
provider is a deterministic hashed bag-of-words stand-in for a frozen
language encoder; it exists so the pipeline runs end to end without model
weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OutOfBounds, ProviderUnavailable
from .prompts import IGNORE, NEGATIVE, POSITIVE, PromptSet, TextPrompt
from .validation import check_dims, check_finite

EMBED_DIM = 768
SPATIAL_ENCODER_SEED = 20240101
_LABEL_OFFSET = {POSITIVE: 1.0, NEGATIVE: -1.0}


@dataclass(frozen=True)
class PromptEmbedding:
    """Per-prompt embedding vectors; absent prompts embed to None."""

    z_point: np.ndarray | None = None
    z_box: np.ndarray | None = None
    z_text: np.ndarray | None = None

    def __post_init__(self):
        for name in ("z_point", "z_box", "z_text"):
            vec = getattr(self, name)
            if vec is None:
                continue
            vec = np.ascontiguousarray(vec, dtype=np.float64)
            if vec.ndim != 1:
                raise ValueError(f"{name} must be a flat vector, got shape {vec.shape}")
            check_finite(vec, name)
            vec.flags.writeable = False
            object.__setattr__(self, name, vec)

    @property
    def has_point(self) -> bool:
        return self.z_point is not None

    @property
    def has_box(self) -> bool:
        return self.z_box is not None

    @property
    def has_text(self) -> bool:
        return self.z_text is not None


@lru_cache(maxsize=8)
def _fourier_matrix(seed: int, dim: int) -> np.ndarray:
    if dim % 2:
        raise ValueError(f"embedding dim must be even, got {dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim // 2, 3))
    g.flags.writeable = False
    return g


def fourier_features(coord_01: np.ndarray, seed: int, dim: int) -> np.ndarray:
    """[sin(2*pi*G c), cos(2*pi*G c)] for a coordinate in the unit cube."""
    g = _fourier_matrix(seed, dim)
    phases = 2.0 * np.pi * (g @ np.asarray(coord_01, dtype=np.float64))
    return np.concatenate([np.sin(phases), np.cos(phases)])


def encode_spatial(ps: PromptSet, frame_dims, enc_seed: int = SPATIAL_ENCODER_SEED,
                   dim: int = EMBED_DIM) -> PromptEmbedding:
    """Encode point and box prompts against their frame's dimensions.

    Points average their features after an additive label offset (+1
    positive, -1 negative); ignore slots are excluded, and an all-ignore
    list yields no point embedding. Boxes average their two corner
    features. Text is not handled here.
    """
    frame_dims = check_dims(frame_dims)
    scale = np.asarray(frame_dims, dtype=np.float64)

    z_point = None
    if ps.point is not None:
        feats = []
        for zyx, label in ps.point.points:
            if label == IGNORE:
                continue
            if any(c >= d for c, d in zip(zyx, frame_dims)):
                raise OutOfBounds(f"point {zyx} outside frame dims {frame_dims}")
            feat = fourier_features(np.asarray(zyx) / scale, enc_seed, dim)
            feats.append(feat + _LABEL_OFFSET[label])
        if feats:
            z_point = np.mean(feats, axis=0)

    z_box = None
    if ps.box is not None:
        if any(h > d for h, d in zip(ps.box.hi, frame_dims)):
            raise OutOfBounds(f"box {ps.box.lo}->{ps.box.hi} outside frame dims {frame_dims}")
        corners = [
            fourier_features(np.asarray(ps.box.lo) / scale, enc_seed, dim),
            fourier_features(np.asarray(ps.box.hi) / scale, enc_seed, dim),
        ]
        z_box = np.mean(corners, axis=0)

    return PromptEmbedding(z_point=z_point, z_box=z_box, z_text=None)


# ---------------------------------------------------------------------------
# text providers
# ---------------------------------------------------------------------------

_TEXT_PROVIDERS: dict[str, object] = {}


def register_text_provider(name: str, fn) -> None:
    """Register a callable (text, dim) -> vector under a provider name."""
    _TEXT_PROVIDERS[name] = fn


def _hashed_bow(text: str, dim: int) -> np.ndarray:
    total = np.zeros(dim, dtype=np.float64)
    for token in text.split():
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        total += np.random.default_rng(seed).standard_normal(dim)
    norm = np.linalg.norm(total)
    if norm == 0.0:
        total[0] = 1.0
        return total
    return total / norm


register_text_provider("hashed-bow", _hashed_bow)


def embed_text(tp: TextPrompt, provider: str = "hashed-bow",
               dim: int = EMBED_DIM) -> np.ndarray:
    """Embed the templated sentence through a registered provider."""
    fn = _TEXT_PROVIDERS.get(provider)
    if fn is None:
        raise ProviderUnavailable(
            f"text provider {provider!r} not registered; have {sorted(_TEXT_PROVIDERS)}"
        )
    vec = np.ascontiguousarray(fn(tp.templated, dim), dtype=np.float64)
    check_finite(vec, "text embedding")
    return vec
