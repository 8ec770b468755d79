"""Command-line entry point wrapping the engine's pipelines."""

from __future__ import annotations

import json
import socket
from pathlib import Path

import click
import numpy as np

from . import __version__
from .backends import DEFAULT_INPUT_DIMS, make_backend
from .errors import LeakDetected, VoxelZoomError
from .evaluation import run_ablation, split_dataset
from .fh import FhParams, components_to_masks, fh_segment
from .io import load_volume, write_rvol
from .metrics import dice_score
from .normalize import normalize as normalize_volume
from .prompts import prompt_set_from_json
from .volume import MaskVolume, Volume
from .zoom import ZoomConfig, infer_resize_only, infer_zoom


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise click.BadParameter(f"expected three integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _load_mask(path: str) -> MaskVolume:
    vol = load_volume(path)
    return MaskVolume(vol.voxels >= 0.5, vol.spacing)


def _write_mask(mask: MaskVolume, path: str) -> None:
    write_rvol(Volume(mask.bits.astype(np.float32), mask.spacing), path)


@click.group()
@click.version_option(version=__version__, prog_name="voxelzoom")
def main():
    """Interactive volumetric segmentation engine."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Where to write the normalization statistics JSON.")
def normalize(input_path, out_path, report_path):
    """Clip and z-score a volume's intensities."""
    try:
        volume = load_volume(input_path)
        out, report = normalize_volume(volume)
    except VoxelZoomError as exc:
        raise click.ClickException(str(exc))
    write_rvol(out, out_path)
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
    click.echo(
        f"normalized {input_path}: clip [{report.clip_low:.4f}, {report.clip_high:.4f}]"
        f" fg_mean {report.fg_mean:.4f} fg_std {report.fg_std:.4f}"
    )


@main.command("pseudo-masks")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=float, default=100.0, show_default=True)
@click.option("--connectivity", type=click.Choice(["6", "26"]), default="6",
              show_default=True)
@click.option("--sigma", type=float, default=0.8, show_default=True)
@click.option("--min-size", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def pseudo_masks(input_path, k, connectivity, sigma, min_size, out_dir):
    """Segment a volume into components and write one mask file each."""
    try:
        volume = load_volume(input_path)
        params = FhParams(k=k, connectivity=int(connectivity), sigma=sigma,
                          min_size=min_size)
        labeling = fh_segment(volume, params)
    except VoxelZoomError as exc:
        raise click.ClickException(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for cid, mask in enumerate(components_to_masks(labeling)):
        name = f"component_{cid:03d}.rvol"
        _write_mask(mask, str(out / name))
        bbox = mask.bounding_box()
        manifest.append({
            "component_id": cid,
            "size": labeling.sizes[cid],
            "bbox": {"lo": list(bbox.lo), "hi": list(bbox.hi)},
            "file": name,
        })
    (out / "manifest.json").write_text(json.dumps({"components": manifest}, indent=2))
    click.echo(f"wrote {labeling.num_components} component masks to {out_dir}")


@main.command()
@click.option("--volume", "volume_path", required=True, type=click.Path(exists=True))
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--backend", "backend_spec", default="fh", show_default=True,
              help="fh, oracle, or remote:<base-url>.")
@click.option("--mode", type=click.Choice(["zoom", "resize"]), default="zoom",
              show_default=True)
@click.option("--out-mask", "out_mask", required=True, type=click.Path())
@click.option("--trace", "trace_path", type=click.Path(), default=None)
@click.option("--input-dims", default=None,
              help="Backend input dims as d,h,w (default 32,64,64).")
@click.option("--parallel", type=int, default=1, show_default=True,
              help="Concurrent window inferences in zoom mode.")
@click.option("--gt", "gt_path", type=click.Path(exists=True), default=None,
              help="Reference mask; required for the oracle backend.")
def segment(volume_path, prompts_path, backend_spec, mode, out_mask, trace_path,
            input_dims, parallel, gt_path):
    """Run prompted segmentation on a volume file."""
    dims = _parse_dims(input_dims) if input_dims else DEFAULT_INPUT_DIMS
    cfg = ZoomConfig(model_input_dims=dims, parallel_windows=parallel)
    try:
        volume = load_volume(volume_path)
        prompts = prompt_set_from_json(json.loads(Path(prompts_path).read_text()))
        gt = _load_mask(gt_path) if gt_path else None
        backend = make_backend(backend_spec, dims, gt=gt)
    except (VoxelZoomError, ValueError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    try:
        if mode == "resize":
            logits = infer_resize_only(volume, prompts, backend, cfg)
            trace_doc = {"mode": mode, "roi": None, "windows": [],
                         "timings_ms": {}, "degraded_to_global": False}
        else:
            logits, trace = infer_zoom(volume, prompts, backend, cfg)
            trace_doc = {
                "mode": mode,
                "roi": None if trace.roi is None
                else {"lo": list(trace.roi.lo), "hi": list(trace.roi.hi)},
                "windows": [{"lo": list(w.lo), "hi": list(w.hi)} for w in trace.windows],
                "skipped_windows": [{"lo": list(w.lo), "hi": list(w.hi)}
                                    for w in trace.skipped_windows],
                "timings_ms": trace.timings_ms,
                "degraded_to_global": trace.degraded_to_global,
            }
    except VoxelZoomError as exc:
        raise click.ClickException(str(exc))
    mask = logits.threshold(cfg.mask_threshold)
    _write_mask(mask, out_mask)
    if trace_path:
        Path(trace_path).write_text(json.dumps(trace_doc, indent=2))
    line = f"mask: {mask.num_foreground} foreground voxels -> {out_mask}"
    if gt is not None:
        line += f" (dice {dice_score(mask, gt):.4f})"
    click.echo(line)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="JSON manifest: [{volume_path, mask_path, category}, ...].")
@click.option("--backend", "backend_spec", default="oracle", show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.option("--out-json", "out_json", type=click.Path(), default=None)
@click.option("--input-dims", default=None,
              help="Backend input dims as d,h,w (default 32,64,64).")
@click.option("--seed", type=int, default=0, show_default=True)
def ablate(dataset_path, backend_spec, out_csv, out_json, input_dims, seed):
    """Compare resize-only against zoom inference over a labeled dataset."""
    dims = _parse_dims(input_dims) if input_dims else DEFAULT_INPUT_DIMS
    cfg = ZoomConfig(model_input_dims=dims)
    try:
        entries = json.loads(Path(dataset_path).read_text())
        cases = []
        for entry in entries:
            volume = load_volume(entry["volume_path"])
            gt = _load_mask(entry["mask_path"])
            cases.append((volume, gt, entry["category"]))
    except (VoxelZoomError, KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot load dataset: {exc}")

    def backend_for(gt, category):
        return make_backend(backend_spec, dims, gt=gt,
                            atlas={category: gt} if backend_spec == "fh" else None)

    try:
        result = run_ablation(cases, backend_for, cfg, seed=seed)
    except VoxelZoomError as exc:
        raise click.ClickException(str(exc))
    Path(out_csv).write_text(result.to_csv())
    json_path = out_json if out_json else str(Path(out_csv).with_suffix(".json"))
    Path(json_path).write_text(result.to_json())
    for agg in result.aggregates():
        click.echo(
            f"{agg['category']:>12} {agg['prompt_config']:>10} {agg['mechanism']:>6}"
            f" mean dice {agg['mean_dice']:.4f} (n={agg['n']})"
        )


@main.command()
@click.argument("files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--train-frac", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def split(files, train_frac, seed, out_path):
    """Partition files into train/test with a content-hash leak check."""
    names = [Path(f).name for f in files]
    keys = names if len(set(names)) == len(files) else list(files)
    entries = dict(zip(keys, files))
    try:
        manifest = split_dataset(entries, train_frac, seed)
    except LeakDetected as exc:
        raise click.ClickException(
            "duplicate content across the split boundary: "
            + ", ".join(f"{a} ~ {b}" for a, b in exc.offenders)
        )
    except (VoxelZoomError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    doc = json.dumps(manifest.to_dict(), indent=2)
    if out_path:
        Path(out_path).write_text(doc)
        click.echo(f"{len(manifest.train_ids)} train / {len(manifest.test_ids)} test"
                   f" -> {out_path}")
    else:
        click.echo(doc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None,
              help="Port to bind; 0 picks an ephemeral port. "
                   "Defaults to VOXELZOOM_PORT or 8000.")
@click.option("--backend", "backend_spec", default="fh", show_default=True,
              help="Default backend for new sessions.")
def serve(host, port, backend_spec):
    """Run the HTTP service."""
    import os

    import uvicorn

    from .server import create_app

    if port is None:
        port = int(os.environ.get("VOXELZOOM_PORT", "8000"))
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        raise click.ClickException(f"cannot bind {host}:{port}: {exc}")
    bound_port = sock.getsockname()[1]
    click.echo(f"listening on http://{host}:{bound_port}")
    app = create_app(default_backend=backend_spec)
    config = uvicorn.Config(app, log_level="info")
    uvicorn.Server(config).run(sockets=[sock])
