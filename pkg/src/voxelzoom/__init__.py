"""Interactive volumetric segmentation with coarse-to-fine prompted inference."""

__version__ = "0.1.0"

from .backends import (
    BackendInfo,
    FhBackend,
    OracleBackend,
    RemoteBackend,
    SegmentRequest,
    make_backend,
    run_backend,
)
from .errors import VoxelZoomError
from .evaluation import run_ablation, split_dataset
from .fh import Felzenszwalb3D, FhParams, fh_segment
from .geometry import Frame, VoxelBox
from .io import load_volume, read_rvol, write_rvol
from .metrics import bce_loss, combined_loss, dice_loss, dice_score
from .normalize import IntensityNormalizer, normalize
from .prompts import (
    BoxPrompt,
    PointPrompt,
    PromptSet,
    TextPrompt,
    gen_box_prompt,
    gen_point_prompt,
)
from .volume import LogitsVolume, MaskVolume, Volume, resize
from .zoom import ZoomConfig, ZoomSegmenter, infer_resize_only, infer_zoom

__all__ = [
    "BackendInfo",
    "BoxPrompt",
    "Felzenszwalb3D",
    "FhBackend",
    "FhParams",
    "Frame",
    "IntensityNormalizer",
    "LogitsVolume",
    "MaskVolume",
    "OracleBackend",
    "PointPrompt",
    "PromptSet",
    "RemoteBackend",
    "SegmentRequest",
    "TextPrompt",
    "Volume",
    "VoxelBox",
    "VoxelZoomError",
    "ZoomConfig",
    "ZoomSegmenter",
    "__version__",
    "bce_loss",
    "combined_loss",
    "dice_loss",
    "dice_score",
    "fh_segment",
    "gen_box_prompt",
    "gen_point_prompt",
    "infer_resize_only",
    "infer_zoom",
    "load_volume",
    "make_backend",
    "normalize",
    "read_rvol",
    "resize",
    "run_ablation",
    "run_backend",
    "split_dataset",
    "write_rvol",
]
