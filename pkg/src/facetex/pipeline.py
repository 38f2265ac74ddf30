"""End-to-end orchestration: extract, train, classify, evaluate.

Feature extraction runs per video (optionally across a process pool) and
results are merged in manifest order, so outputs are byte-identical
regardless of the worker count. Per-video failures are logged and
reported without aborting the batch.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import decision as decision_mod
from . import metrics as metrics_mod
from .config import RunConfig
from .decision import VideoVerdict
from .descriptors import FeatureVector, extract_descriptor
from .errors import FacetexError, ValidationError
from .featio import read_features, write_features
from .ingest import (
    MANIPULATIONS,
    DatasetManifest,
    VideoRecord,
    load_frames,
    load_landmarks,
)
from .svm import LabeledSet, LinearSvmModel, train_svm
from .tracking import (
    build_roi_track,
    compute_motion,
    derive_initial_box,
    dump_motion_csv,
    smooth_motion,
)
from .windowing import extract_patch_volume, partition, select_area

log = logging.getLogger(__name__)

VERDICTS_FORMAT_TAG = "facetex-verdicts/1"

WORKERS_ENV = "FACETEX_WORKERS"


def video_features(
    record: VideoRecord,
    cfg: RunConfig,
    motion_dump_dir: Optional[Path] = None,
) -> list[FeatureVector]:
    """Run the pre-processing and descriptor chain for one video."""
    frames = load_frames(record.frames_path)
    landmarks = load_landmarks(record.landmarks_path)
    if landmarks.frame_count != frames.frame_count:
        raise ValidationError(
            f"{record.id}: {landmarks.frame_count} landmark frames for "
            f"{frames.frame_count} video frames"
        )
    box = record.initial_box
    if box is None:
        box = derive_initial_box(
            landmarks.points[0],
            cfg.box_margin,
            frame_dims=(frames.height, frames.width),
        )
    motion = compute_motion(landmarks, cfg.anchors)
    smoothed = smooth_motion(motion, cfg.smooth_window, cfg.smooth_order)
    if motion_dump_dir is not None:
        motion_dump_dir.mkdir(parents=True, exist_ok=True)
        dump_motion_csv(motion_dump_dir / f"{record.id}.motion.csv", motion, smoothed)
    roi = build_roi_track(box, smoothed, frames.height, frames.width)
    if roi.clamped_frames:
        log.warning(
            "%s: ROI clamped at the frame border on %d frames",
            record.id,
            roi.clamped_frames,
        )
    volume = replace(extract_patch_volume(frames, roi), video_id=record.id)
    out = []
    for window in partition(volume, cfg.windowing()):
        area_window = select_area(window, cfg.area)
        fv = extract_descriptor(area_window, cfg.descriptor, cfg.mode)
        fv.label = record.label
        fv.technique = record.technique
        fv.split = record.split
        out.append(fv)
    return out


def _extract_one(args: tuple[VideoRecord, RunConfig, Optional[Path]]):
    record, cfg, motion_dump_dir = args
    try:
        return record.id, video_features(record, cfg, motion_dump_dir), None
    except Exception as exc:  # noqa: BLE001 - failures are isolated per video
        return record.id, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExtractReport:
    written: list[str] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def worker_count(explicit: Optional[int] = None) -> int:
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", WORKERS_ENV, env)
    return 1


def extract_features(
    manifest: DatasetManifest,
    cfg: RunConfig,
    out_dir: str | Path,
    workers: Optional[int] = None,
    dump_motion: bool = False,
) -> ExtractReport:
    """Extract features for every manifest video into ``out_dir``.

    One ``<video_id>.feat`` file per video, one record per window, written
    in manifest order. ``dump_motion`` additionally writes a raw/smoothed
    motion CSV per video for debugging.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = ExtractReport()
    motion_dump_dir = out_dir / "motion" if dump_motion else None
    jobs = [(record, cfg, motion_dump_dir) for record in manifest]
    n_workers = worker_count(workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(job) for job in jobs]
    config_echo = cfg.to_dict()
    for video_id, features, error in results:
        if error is not None:
            log.error("extraction failed for %s: %s", video_id, error)
            report.failures[video_id] = error
            continue
        path = out_dir / f"{video_id}.feat"
        write_features(path, features, config=config_echo)
        report.written.append(video_id)
    return report


def load_feature_dir(path: str | Path) -> dict[str, list[FeatureVector]]:
    """Read every ``*.feat`` file into a video-id keyed dict."""
    path = Path(path)
    out: dict[str, list[FeatureVector]] = {}
    for file in sorted(path.glob("*.feat")):
        _, records = read_features(file)
        if not records:
            continue
        out[records[0].video_id] = records
    if not out:
        raise ValidationError(f"{path}: no feature files found")
    return out


def training_set(
    features_by_video: dict[str, list[FeatureVector]], technique: str
) -> LabeledSet:
    """Window-level training matrix for one technique's classifier.

    Uses the train-split windows of the pristine videos (label 0) and of
    the requested technique (label 1); windows inherit their video labels.
    """
    if technique not in MANIPULATIONS:
        raise ValidationError(f"technique must be one of {MANIPULATIONS}")
    selected: list[FeatureVector] = []
    for records in features_by_video.values():
        for fv in records:
            if fv.split != "train":
                continue
            if fv.technique not in ("OR", technique):
                continue
            selected.append(fv)
    if not selected:
        raise ValidationError(f"no training windows for technique {technique}")
    return LabeledSet.from_features(selected)


def train_technique(
    features_by_video: dict[str, list[FeatureVector]],
    technique: str,
    cfg: RunConfig,
) -> LinearSvmModel:
    dataset = training_set(features_by_video, technique)
    return train_svm(
        dataset,
        C=cfg.svm_c,
        tol=cfg.svm_tol,
        max_iter=cfg.svm_max_iter,
        technique=technique,
        descriptor=cfg.descriptor,
        area=cfg.area,
        mode=cfg.mode,
        windowing=cfg.to_dict()["window"],
        config=cfg.to_dict(),
    )


def _check_model_compat(model: LinearSvmModel, fv: FeatureVector) -> None:
    if model.dim != fv.dim:
        raise ValidationError(
            f"feature dim {fv.dim} does not match model dim {model.dim} "
            f"(video {fv.video_id})"
        )


def classify_videos(
    models: Sequence[LinearSvmModel],
    features_by_video: dict[str, list[FeatureVector]],
    split: Optional[str] = "test",
) -> list[VideoVerdict]:
    """Produce one verdict per video, fusing when three models are given."""
    if len(models) not in (1, 3):
        raise ValidationError("classification takes one model or exactly three")
    if len(models) == 3:
        techniques = sorted(m.technique for m in models)
        if techniques != sorted(MANIPULATIONS):
            raise ValidationError(
                f"fusion needs one model per technique, got {techniques}"
            )
    verdicts = []
    for video_id in sorted(features_by_video):
        records = features_by_video[video_id]
        if split is not None and records and records[0].split != split:
            continue
        for model in models:
            _check_model_compat(model, records[0])
        if len(models) == 1:
            verdicts.append(decision_mod.classify_video(models[0], records))
        else:
            per_tech = {
                m.technique: decision_mod.classify_video(m, records) for m in models
            }
            verdicts.append(decision_mod.fuse_and_attribute(per_tech))
    return verdicts


def write_verdicts(
    path: str | Path,
    verdicts: Iterable[VideoVerdict],
    config: Optional[dict] = None,
    model_refs: Optional[list[str]] = None,
) -> None:
    """Write verdicts as JSON lines after one meta line with the config echo."""
    with open(path, "w") as fh:
        meta = {
            "format": VERDICTS_FORMAT_TAG,
            "config": config or {},
            "model_refs": model_refs or [],
        }
        fh.write(json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        for v in verdicts:
            record: dict = {
                "video_id": v.video_id,
                "p_hat": v.label,
                "s_hat": v.score,
                "N": v.n_windows,
            }
            if v.window_predictions:
                record["per_window"] = [
                    {"p": p.label, "s": p.score} for p in v.window_predictions
                ]
            if v.attribution is not None:
                record["attribution"] = v.attribution
            if v.extras:
                record["detail"] = v.extras
            record["model_refs"] = model_refs or []
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def read_verdicts(path: str | Path) -> tuple[dict, list[dict]]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty verdict file")
    meta = json.loads(lines[0])
    if meta.get("format") != VERDICTS_FORMAT_TAG:
        raise ValidationError(f"{path}: not a verdict file")
    return meta, [json.loads(line) for line in lines[1:] if line.strip()]


def evaluate_verdicts(
    verdict_records: list[dict],
    manifest: DatasetManifest,
    *,
    window_level_auc: bool = False,
    unconditioned_confusion: bool = False,
) -> dict:
    """Join verdicts with manifest truth and compute the report."""
    by_id = {}
    for rec in verdict_records:
        by_id[rec["video_id"]] = rec
    truth = {r.id: r for r in manifest}
    missing = sorted(set(by_id) - set(truth))
    if missing:
        raise ValidationError(f"verdicts reference unknown ids: {missing[:5]}")
    ids = sorted(by_id)
    predicted = [by_id[i]["p_hat"] for i in ids]
    actual = [truth[i].label for i in ids]
    scores = [by_id[i]["s_hat"] for i in ids]
    report: dict = {
        "n_videos": len(ids),
        "accuracy": metrics_mod.accuracy(predicted, actual),
    }
    fpr, fnr = metrics_mod.rates(predicted, actual)
    report["fpr"] = fpr
    report["fnr"] = fnr
    if len(set(actual)) == 2:
        report["auc"] = metrics_mod.auc(scores, actual)
    else:
        report["auc"] = None
    if window_level_auc:
        w_scores: list[float] = []
        w_labels: list[int] = []
        for i in ids:
            for wrec in by_id[i].get("per_window", []):
                w_scores.append(wrec["s"])
                w_labels.append(truth[i].label)
        if w_scores and len(set(w_labels)) == 2:
            report["window_auc"] = metrics_mod.auc(w_scores, w_labels)
    has_attribution = any("attribution" in by_id[i] for i in ids)
    if has_attribution:
        manipulated = [i for i in ids if truth[i].label == 1]
        true_tech = [truth[i].technique for i in manipulated]
        attributed = [by_id[i].get("attribution") for i in manipulated]
        detected = [by_id[i]["p_hat"] == 1 for i in manipulated]
        report["attribution_confusion"] = metrics_mod.attribution_confusion(
            true_tech, attributed, detected
        ).to_dict()
        if unconditioned_confusion:
            blind = []
            for i in manipulated:
                detail = by_id[i].get("detail", {})
                tech_scores = detail.get("technique_scores")
                if by_id[i].get("attribution"):
                    blind.append(by_id[i]["attribution"])
                elif tech_scores:
                    blind.append(
                        max(MANIPULATIONS, key=lambda t: (tech_scores[t], -MANIPULATIONS.index(t)))
                    )
                else:
                    blind.append(None)
            report["attribution_confusion_unconditioned"] = (
                metrics_mod.attribution_confusion(
                    true_tech, blind, [a is not None for a in blind]
                ).to_dict()
            )
    return report


def _run_single(
    manifest: DatasetManifest, cfg: RunConfig, technique: str, workdir: Path
) -> dict:
    """Extract + train + classify + evaluate one (config, technique) cell."""
    subset = DatasetManifest(
        manifest.select(techniques=("OR", technique))
    )
    feat_dir = workdir / f"{technique}_{cfg.area}_{cfg.mode}_{int(cfg.window_sliding)}"
    report = extract_features(subset, cfg, feat_dir)
    if report.failures:
        raise FacetexError(f"extraction failures: {report.failures}")
    features = load_feature_dir(feat_dir)
    model = train_technique(features, technique, cfg)
    verdicts = classify_videos([model], features, split="test")
    ids = [v.video_id for v in verdicts]
    truth = {r.id: r for r in subset}
    predicted = [v.label for v in verdicts]
    actual = [truth[i].label for i in ids]
    scores = [v.score for v in verdicts]
    out = {
        "technique": technique,
        "area": cfg.area,
        "mode": cfg.mode,
        "sliding": cfg.window_sliding,
        "accuracy": metrics_mod.accuracy(predicted, actual),
    }
    out["auc"] = metrics_mod.auc(scores, actual) if len(set(actual)) == 2 else None
    return out


def sliding_ablation(
    manifest: DatasetManifest,
    cfg: RunConfig,
    workdir: str | Path,
    areas: Optional[Sequence[str]] = None,
    modes: Optional[Sequence[str]] = None,
    techniques: Optional[Sequence[str]] = None,
) -> list[dict]:
    """Accuracy difference (sliding minus non-sliding) per configuration.

    One row per (area, mode) with per-technique accuracy losses, mirroring
    a paired run of the full pipeline with windowing on and off.
    """
    workdir = Path(workdir)
    areas = list(areas or ("F", "T", "B"))
    modes = list(modes or ("direct", "inverse", "bidirectional"))
    techniques = list(techniques or MANIPULATIONS)
    rows = []
    for area in areas:
        for mode in modes:
            row: dict = {"area": area, "mode": mode, "loss": {}}
            for technique in techniques:
                sliding_cfg = cfg.with_overrides(
                    area=area, mode=mode, window_sliding=True
                )
                fixed_cfg = cfg.with_overrides(
                    area=area, mode=mode, window_sliding=False
                )
                with_windows = _run_single(manifest, sliding_cfg, technique, workdir)
                without = _run_single(manifest, fixed_cfg, technique, workdir)
                row["loss"][technique] = (
                    with_windows["accuracy"] - without["accuracy"]
                )
            row["average_loss"] = float(
                np.mean([row["loss"][t] for t in techniques])
            )
            rows.append(row)
    return rows


def experiment_grid(
    manifest: DatasetManifest,
    cfg: RunConfig,
    workdir: str | Path,
    areas: Optional[Sequence[str]] = None,
    modes: Optional[Sequence[str]] = None,
    techniques: Optional[Sequence[str]] = None,
) -> list[dict]:
    """Accuracy/AUC per (area, mode) row and technique column."""
    workdir = Path(workdir)
    areas = list(areas or ("F", "T", "B"))
    modes = list(modes or ("direct", "inverse", "bidirectional"))
    techniques = list(techniques or MANIPULATIONS)
    rows = []
    for area in areas:
        for mode in modes:
            row: dict = {"area": area, "mode": mode, "accuracy": {}, "auc": {}}
            for technique in techniques:
                cell_cfg = cfg.with_overrides(area=area, mode=mode)
                cell = _run_single(manifest, cell_cfg, technique, workdir)
                row["accuracy"][technique] = cell["accuracy"]
                row["auc"][technique] = cell["auc"]
            row["average_accuracy"] = float(
                np.mean([row["accuracy"][t] for t in techniques])
            )
            aucs = [row["auc"][t] for t in techniques if row["auc"][t] is not None]
            row["average_auc"] = float(np.mean(aucs)) if aucs else None
            rows.append(row)
    return rows
