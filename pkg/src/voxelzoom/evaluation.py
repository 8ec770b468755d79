"""Dataset split with content-hash leak checking and the directional
resize-vs-zoom ablation runner."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, InsufficientForeground, LeakDetected
from .metrics import dice_score
from .prompts import BoxPrompt, PromptSet, TextPrompt, gen_box_prompt, gen_point_prompt
from .volume import MaskVolume
from .zoom import ZoomConfig, infer_resize_only, infer_zoom

PROMPT_CONFIGS = ("text", "point", "box", "point+text", "box+text")
MECHANISMS = ("resize", "zoom")
HASH_ALGORITHM = "sha256"
CSV_COLUMNS = ("case_id", "category", "prompt_config", "mechanism", "dice")


@dataclass(frozen=True)
class SplitManifest:
    """Train/test id partition plus the content hashes that proved it leak-free."""

    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    algorithm: str
    hashes: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "hashes": dict(self.hashes),
        }


def split_dataset(entries, train_frac: float, seed: int) -> SplitManifest:
    """Seeded 80/20-style split with a cross-boundary duplicate check.

    entries maps id -> file path (a dict or iterable of pairs). Ids are
    shuffled deterministically; the first floor(train_frac * n) go to
    train. Identical file content appearing on both sides raises
    LeakDetected naming the offending id pairs.
    """
    if not 0 < train_frac < 1:
        raise ValueError(f"train_frac must be in (0, 1), got {train_frac}")
    pairs = dict(entries)
    ids = sorted(pairs)
    if not ids:
        raise ValueError("split needs at least one entry")

    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_train = int(train_frac * len(ids))
    train_ids = tuple(shuffled[:n_train])
    test_ids = tuple(shuffled[n_train:])

    hashes: dict[str, str] = {}
    for i in ids:
        with open(pairs[i], "rb") as fh:
            hashes[i] = hashlib.sha256(fh.read()).hexdigest()

    by_hash: dict[str, list[str]] = {}
    for i in train_ids:
        by_hash.setdefault(hashes[i], []).append(i)
    offenders = []
    for i in test_ids:
        for train_id in by_hash.get(hashes[i], []):
            offenders.append((train_id, i))
    if offenders:
        raise LeakDetected(offenders)

    return SplitManifest(train_ids, test_ids, HASH_ALGORITHM, hashes)


@dataclass(frozen=True)
class EvalRecord:
    """One (case, prompt configuration, mechanism) measurement."""

    case_id: str
    category: str
    prompt_config: str
    mechanism: str
    dice: float

    def __post_init__(self):
        if not 0.0 <= self.dice <= 1.0:
            raise ValueError(f"dice out of range: {self.dice}")


@dataclass(frozen=True)
class AblationResult:
    records: tuple[EvalRecord, ...]

    def mean_dice(self, prompt_config: str, mechanism: str) -> float:
        vals = [r.dice for r in self.records
                if r.prompt_config == prompt_config and r.mechanism == mechanism]
        if not vals:
            raise ValueError(f"no records for ({prompt_config}, {mechanism})")
        return sum(vals) / len(vals)

    def aggregates(self) -> list[dict]:
        groups: dict[tuple[str, str, str], list[float]] = {}
        for r in self.records:
            groups.setdefault((r.category, r.prompt_config, r.mechanism), []).append(r.dice)
        out = []
        for (cat, pc, mech), vals in sorted(groups.items()):
            out.append({
                "category": cat,
                "prompt_config": pc,
                "mechanism": mech,
                "mean_dice": sum(vals) / len(vals),
                "n": len(vals),
            })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow([r.case_id, r.category, r.prompt_config,
                             r.mechanism, f"{r.dice:.6f}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "records": [
                    {
                        "case_id": r.case_id,
                        "category": r.category,
                        "prompt_config": r.prompt_config,
                        "mechanism": r.mechanism,
                        "dice": r.dice,
                    }
                    for r in self.records
                ],
                "aggregates": self.aggregates(),
            },
            indent=2,
        )


def _prompts_for(config: str, gt: MaskVolume, category: str, seed: int) -> PromptSet:
    """Simulated user prompts for one configuration, derived from the mask.

    Degenerate masks fall back rather than fail: an empty mask yields
    exterior-only points and a full-volume box.
    """
    point = None
    box = None
    text = TextPrompt(category) if "text" in config else None
    if "point" in config:
        try:
            point = gen_point_prompt(gt, n_pos=2, n_neg=2, rng_seed=seed)
        except InsufficientForeground:
            point = gen_point_prompt(gt, n_pos=0, n_neg=2, rng_seed=seed)
    if "box" in config:
        try:
            box = gen_box_prompt(gt, rng_seed=seed)
        except EmptyMask:
            box = BoxPrompt((0, 0, 0), gt.dims)
    if config == "text":
        return PromptSet(text=text)
    return PromptSet(point=point, box=box, text=text)


def _case_seed(base: int, case_index: int, config_index: int) -> int:
    return (base * 1_000_003 + case_index * 31 + config_index) & 0x7FFFFFFF


def run_ablation(cases, backend, cfg: ZoomConfig, seed: int = 0,
                 max_workers: int = 4) -> AblationResult:
    """Evaluate every case under each prompt configuration and mechanism.

    cases is a list of (volume, reference mask, category). backend is a
    backend instance shared across cases, or a factory
    (mask, category) -> backend when per-case state is needed. Cases run
    concurrently; the result table keeps deterministic case order.
    """
    cases = list(cases)
    if not cases:
        raise ValueError("run_ablation needs at least one case")

    backend_for = backend if callable(backend) and not hasattr(backend, "segment") \
        else (lambda _gt, _cat: backend)

    def eval_case(idx_case):
        idx, (volume, gt, category) = idx_case
        case_backend = backend_for(gt, category)
        out = []
        for ci, config in enumerate(PROMPT_CONFIGS):
            ps = _prompts_for(config, gt, category, _case_seed(seed, idx, ci))
            for mechanism in MECHANISMS:
                if mechanism == "resize":
                    logits = infer_resize_only(volume, ps, case_backend, cfg)
                else:
                    logits, _ = infer_zoom(volume, ps, case_backend, cfg)
                d = dice_score(logits.threshold(cfg.mask_threshold), gt)
                out.append(EvalRecord(f"case{idx:03d}", category, config, mechanism, d))
        return out

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        per_case = list(pool.map(eval_case, enumerate(cases)))
    records = tuple(r for chunk in per_case for r in chunk)
    return AblationResult(records)
