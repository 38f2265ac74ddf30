"""Aggregation of per-window predictions into per-video verdicts.

A video's label is the majority vote of its window labels (ties favor the
real class) and its score is the mean of the scores on the winning side.
For blind detection the three technique classifiers are OR-fused, and a
positive fused verdict is attributed to the technique with the maximum
score.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .descriptors import FeatureVector
from .errors import ValidationError
from .ingest import MANIPULATIONS
from .svm import LinearSvmModel, predict


@dataclass(frozen=True)
class WindowPrediction:
    label: int
    score: float
    window_index: int = 0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationError(f"window label must be 0 or 1, got {self.label}")
        if not np.isfinite(self.score):
            raise ValidationError("window score must be finite")


@dataclass
class VideoVerdict:
    video_id: str
    label: int
    score: float
    window_predictions: tuple[WindowPrediction, ...] = ()
    attribution: Optional[str] = None
    extras: dict = field(default_factory=dict)

    @property
    def n_windows(self) -> int:
        return len(self.window_predictions)


def majority_vote(labels: Sequence[int]) -> int:
    """Modal label of a non-empty {0,1} list; an exact tie returns 0."""
    labels = list(labels)
    if not labels:
        raise ValidationError("majority vote over an empty list")
    ones = sum(1 for v in labels if v == 1)
    zeros = len(labels) - ones
    return 1 if ones > zeros else 0


def reduced_mean(
    predictions: Sequence[WindowPrediction], video_label: int
) -> float:
    """Mean score over the windows whose label matches the video label.

    If no window matches (possible only for an externally supplied label),
    the mean over all windows is returned with a warning.
    """
    if not predictions:
        raise ValidationError("reduced mean over an empty prediction list")
    matching = [p.score for p in predictions if p.label == video_label]
    if not matching:
        warnings.warn(
            "no window matches the video label; falling back to the full mean",
            stacklevel=2,
        )
        matching = [p.score for p in predictions]
    return float(np.mean(matching))


def classify_video(
    model: LinearSvmModel, features: Sequence[FeatureVector]
) -> VideoVerdict:
    """Predict every window, vote, and reduce the scores."""
    if not features:
        raise ValidationError("cannot classify a video with no feature windows")
    preds = []
    for fv in features:
        label, score = predict(model, fv)
        preds.append(WindowPrediction(label, score, window_index=fv.window_index))
    video_label = majority_vote([p.label for p in preds])
    score = reduced_mean(preds, video_label)
    return VideoVerdict(
        video_id=features[0].video_id,
        label=video_label,
        score=score,
        window_predictions=tuple(preds),
    )


def fuse_and_attribute(verdicts: Mapping[str, VideoVerdict]) -> VideoVerdict:
    """OR-fuse the three technique verdicts for one video.

    The fused label is 1 as soon as any technique votes 1. A positive
    verdict is attributed to the technique with the maximum score (ties go
    to the earlier technique in DF, F2F, FSW order) and the fused score is
    that maximum; for a negative verdict the fused score is the mean of
    the three scores, kept only as a reporting aid and tagged as such in
    ``extras``.
    """
    missing = [t for t in MANIPULATIONS if t not in verdicts]
    if missing:
        raise ValidationError(f"missing technique verdicts: {missing}")
    per_tech = {t: verdicts[t] for t in MANIPULATIONS}
    video_ids = {v.video_id for v in per_tech.values()}
    if len(video_ids) > 1:
        raise ValidationError(f"verdicts describe different videos: {video_ids}")
    fused_label = 1 if any(v.label == 1 for v in per_tech.values()) else 0
    scores = {t: v.score for t, v in per_tech.items()}
    if fused_label == 1:
        attribution = max(MANIPULATIONS, key=lambda t: (scores[t], -MANIPULATIONS.index(t)))
        fused_score = scores[attribution]
        score_rule = "max"
    else:
        attribution = None
        fused_score = float(np.mean([scores[t] for t in MANIPULATIONS]))
        score_rule = "mean-of-three (reporting aid)"
    return VideoVerdict(
        video_id=next(iter(video_ids)),
        label=fused_label,
        score=fused_score,
        attribution=attribution,
        extras={
            "score_rule": score_rule,
            "technique_scores": scores,
            "technique_labels": {t: v.label for t, v in per_tech.items()},
        },
    )
