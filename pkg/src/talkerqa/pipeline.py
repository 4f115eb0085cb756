"""End-to-end orchestration: clip extraction, model training, evaluation.

`extract_dataset` walks a dataset directory, builds one composite file per
clip, and records an `index.json` (clip id -> pid and centroid/sync details)
next to the composites so later stages know each clip's content grouping.
Timing lives only in the human-readable log; every machine-read artifact is
byte-deterministic for a fixed input.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import CrossValidationReport, run_cross_validation
from .fscd import (
    DEFAULT_GRID,
    DEFAULT_LAMBDA,
    RegressorModel,
    assemble_composite,
    extract_features,
    load_composite,
    save_composite,
    save_model,
    train_regressor,
)
from .media import ClipBundle, first_frame, load_clip
from .slicing import extract_yt_slice, load_keypoints, mouth_centroid, scale_center, slice_to_image
from .subjective import read_mos_csv
from .sync import BaselineSyncScorer, SyncScorer, mouth_crop

INDEX_NAME = "index.json"
LOG_NAME = "extract.log"


class PipelineError(Exception):
    """A pipeline stage could not produce its outputs."""


@dataclass(frozen=True)
class ClipExtraction:
    clip_id: str
    pid: str
    centroid_source: str
    centroid_x: float
    lse_c: float
    lse_d: float
    elapsed: float


@dataclass(frozen=True)
class ExtractionResult:
    out_dir: Path
    succeeded: tuple[ClipExtraction, ...]
    failed: dict[str, str]  # clip_id -> error message

    @property
    def index_path(self) -> Path:
        return self.out_dir / INDEX_NAME

    @property
    def log_path(self) -> Path:
        return self.out_dir / LOG_NAME


def discover_manifests(dataset_dir: str | Path) -> list[Path]:
    """All clip manifests under the dataset directory, sorted by clip dir name."""
    root = Path(dataset_dir)
    manifests = sorted(root.glob("*/manifest.json"))
    if not manifests:
        raise PipelineError(f"no clip manifests found under {root}")
    return manifests


def extract_clip(bundle: ClipBundle, keypoints_path: str | Path,
                 scorer: SyncScorer | None = None,
                 scale_c: float = 16.0, scale_d: float = 16.0, crop_box: int = 96):
    """Composite + bookkeeping for one loaded clip."""
    scorer = scorer or BaselineSyncScorer()
    kps = load_keypoints(keypoints_path)
    center = scale_center(
        mouth_centroid(kps),
        (kps.image_w, kps.image_h),
        (bundle.video.width, bundle.video.height),
    )
    first = first_frame(bundle.video)
    slice_img = slice_to_image(extract_yt_slice(bundle.video, center.x), first)
    sync = scorer.score(mouth_crop(bundle.video, center, box=crop_box), bundle.audio)
    comp = assemble_composite(first, slice_img, sync, scale_c=scale_c, scale_d=scale_d,
                              clip_id=bundle.clip_id)
    return comp, center, sync


def _extract_one(manifest: Path, keypoints_dir: Path, out_dir: Path,
                 scorer: SyncScorer, scale_c: float, scale_d: float,
                 crop_box: int) -> ClipExtraction:
    start = time.perf_counter()
    bundle = load_clip(manifest)
    comp, center, sync = extract_clip(
        bundle, keypoints_dir / f"{bundle.clip_id}.json", scorer,
        scale_c=scale_c, scale_d=scale_d, crop_box=crop_box)
    save_composite(comp, out_dir / f"{bundle.clip_id}.fscd")
    return ClipExtraction(
        clip_id=bundle.clip_id,
        pid=bundle.pid,
        centroid_source=center.source,
        centroid_x=center.x,
        lse_c=sync.lse_c,
        lse_d=sync.lse_d,
        elapsed=time.perf_counter() - start,
    )


def extract_dataset(dataset_dir: str | Path, keypoints_dir: str | Path,
                    out_dir: str | Path, workers: int = 1,
                    scorer: SyncScorer | None = None,
                    scale_c: float = 16.0, scale_d: float = 16.0,
                    crop_box: int = 96) -> ExtractionResult:
    """Extract composites for every clip in the dataset.

    Per-clip failures are logged and skipped; the call only raises when no
    clip succeeds at all.
    """
    scorer = scorer or BaselineSyncScorer()
    keypoints_dir = Path(keypoints_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifests = discover_manifests(dataset_dir)

    succeeded: dict[str, ClipExtraction] = {}
    failed: dict[str, str] = {}

    def run(manifest: Path) -> None:
        clip_id = manifest.parent.name
        try:
            succeeded[clip_id] = _extract_one(manifest, keypoints_dir, out, scorer,
                                              scale_c, scale_d, crop_box)
        except Exception as exc:  # noqa: BLE001 - isolate per-clip failures
            failed[clip_id] = str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, manifests))
    else:
        for manifest in manifests:
            run(manifest)

    log_lines = []
    for clip_id in sorted(succeeded):
        e = succeeded[clip_id]
        log_lines.append(
            f"{clip_id} status=ok centroid={e.centroid_source} x={e.centroid_x:.3f} "
            f"lse_c={e.lse_c:.6f} lse_d={e.lse_d:.6f} elapsed={e.elapsed:.3f}s"
        )
    for clip_id in sorted(failed):
        log_lines.append(f"{clip_id} status=error message={failed[clip_id]}")
    (out / LOG_NAME).write_text("\n".join(log_lines) + "\n")

    index = {
        clip_id: {
            "pid": e.pid,
            "centroid_source": e.centroid_source,
            "centroid_x": e.centroid_x,
            "lse_c": e.lse_c,
            "lse_d": e.lse_d,
        }
        for clip_id, e in sorted(succeeded.items())
    }
    (out / INDEX_NAME).write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")

    if not succeeded:
        raise PipelineError(
            f"all {len(failed)} clip(s) failed; first error: {next(iter(failed.values()))}"
        )
    return ExtractionResult(out_dir=out, succeeded=tuple(succeeded[c] for c in sorted(succeeded)),
                            failed=failed)


def load_index(composites_dir: str | Path) -> dict[str, dict]:
    path = Path(composites_dir) / INDEX_NAME
    if not path.exists():
        raise PipelineError(f"{path} missing; run extraction first")
    return json.loads(path.read_text())


def load_feature_table(composites_dir: str | Path,
                       grid: int = DEFAULT_GRID) -> dict[str, np.ndarray]:
    """clip_id -> pooled feature vector for every composite in the directory."""
    paths = sorted(Path(composites_dir).glob("*.fscd"))
    if not paths:
        raise PipelineError(f"no composite files under {composites_dir}")
    return {p.stem: extract_features(load_composite(p), grid=grid) for p in paths}


def _check_coverage(feature_ids, mos_ids) -> None:
    no_mos = sorted(set(feature_ids) - set(mos_ids))
    no_comp = sorted(set(mos_ids) - set(feature_ids))
    if no_mos or no_comp:
        raise PipelineError(
            f"composites without MOS rows: {no_mos or 'none'}; "
            f"MOS rows without composites: {no_comp or 'none'}"
        )


def evaluate_dataset(composites_dir: str | Path, mos_csv: str | Path,
                     k: int = 5, seed: int = 0,
                     ridge_lambda: float = DEFAULT_LAMBDA,
                     grid: int = DEFAULT_GRID) -> CrossValidationReport:
    """Content-disjoint k-fold cross-validation over extracted composites."""
    features = load_feature_table(composites_dir, grid=grid)
    mos_table = read_mos_csv(mos_csv)
    _check_coverage(features, mos_table)
    index = load_index(composites_dir)
    pid_of = {cid: index[cid]["pid"] for cid in features}
    return run_cross_validation(features, mos_table, pid_of, k=k, seed=seed,
                                ridge_lambda=ridge_lambda, grid=grid)


def train_full_model(composites_dir: str | Path, mos_csv: str | Path,
                     ridge_lambda: float = DEFAULT_LAMBDA,
                     grid: int = DEFAULT_GRID) -> RegressorModel:
    """Regressor trained on every clip with a MOS row."""
    features = load_feature_table(composites_dir, grid=grid)
    mos_table = read_mos_csv(mos_csv)
    _check_coverage(features, mos_table)
    clip_ids = sorted(features)
    X = np.stack([features[c] for c in clip_ids])
    y = np.array([mos_table[c] for c in clip_ids])
    return train_regressor(X, y, ridge_lambda=ridge_lambda, grid=grid)


def train_and_report(composites_dir: str | Path, mos_csv: str | Path, out_dir: str | Path,
                     k: int = 5, seed: int = 0,
                     ridge_lambda: float = DEFAULT_LAMBDA,
                     grid: int = DEFAULT_GRID) -> tuple[Path, Path]:
    """Cross-validation report plus a model trained on all data; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = evaluate_dataset(composites_dir, mos_csv, k=k, seed=seed,
                              ridge_lambda=ridge_lambda, grid=grid)
    report_path = out / "report.json"
    report.save(report_path)
    model = train_full_model(composites_dir, mos_csv, ridge_lambda=ridge_lambda, grid=grid)
    model_path = out / "model.json"
    save_model(model, model_path)
    return model_path, report_path


def evaluate_and_report(composites_dir: str | Path, mos_csv: str | Path, out_dir: str | Path,
                        k: int = 5, seed: int = 0,
                        ridge_lambda: float = DEFAULT_LAMBDA,
                        grid: int = DEFAULT_GRID) -> Path:
    """Cross-validation report only; returns the report path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = evaluate_dataset(composites_dir, mos_csv, k=k, seed=seed,
                              ridge_lambda=ridge_lambda, grid=grid)
    report_path = out / "report.json"
    report.save(report_path)
    return report_path
