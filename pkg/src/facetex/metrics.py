"""Classification metrics and report rendering helpers.

AUC uses the rank statistic with half credit for ties, computed over
video-level scores. Attribution confusion matrices condition on videos
that are truly manipulated and detected as such, with an unconditioned
variant behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .ingest import MANIPULATIONS


def accuracy(predicted: Sequence[int], actual: Sequence[int]) -> float:
    """Fraction of matching labels."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.size == 0:
        raise ValidationError("predicted/actual must be non-empty and aligned")
    return float(np.mean(predicted == actual))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve of thresholding ``scores`` against ``labels``."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValidationError("scores/labels must align")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes present")
    ranks = _average_ranks(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def rates(
    predicted: Sequence[int], actual: Sequence[int]
) -> tuple[Optional[float], Optional[float]]:
    """(false positive rate, false negative rate); None when undefined."""
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.size == 0:
        raise ValidationError("predicted/actual must be non-empty and aligned")
    negatives = int(np.sum(actual == 0))
    positives = int(np.sum(actual == 1))
    fp = int(np.sum((actual == 0) & (predicted == 1)))
    fn = int(np.sum((actual == 1) & (predicted == 0)))
    fpr = fp / negatives if negatives else None
    fnr = fn / positives if positives else None
    return fpr, fnr


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts and row percentages over the three manipulation techniques."""

    techniques: tuple[str, ...]
    counts: np.ndarray  # (3, 3) int, rows true, cols attributed
    row_percent: tuple[Optional[tuple[float, ...]], ...]

    def to_dict(self) -> dict:
        return {
            "techniques": list(self.techniques),
            "counts": self.counts.tolist(),
            "row_percent": [
                None if row is None else list(row) for row in self.row_percent
            ],
        }


def attribution_confusion(
    true_techniques: Sequence[str],
    attributed: Sequence[Optional[str]],
    detected: Optional[Sequence[bool]] = None,
) -> ConfusionMatrix:
    """Confusion of attributed vs true techniques for manipulated videos.

    Only entries with a detection (``detected`` true, or attribution present
    when ``detected`` is omitted) are counted; rows are true techniques,
    columns attributed ones, and percentages are row-normalized.
    """
    true_techniques = list(true_techniques)
    attributed = list(attributed)
    if len(true_techniques) != len(attributed):
        raise ValidationError("true/attributed technique lists must align")
    if detected is None:
        detected = [a is not None for a in attributed]
    index = {t: i for i, t in enumerate(MANIPULATIONS)}
    counts = np.zeros((3, 3), dtype=np.int64)
    for truth, attr, hit in zip(true_techniques, attributed, detected):
        if not hit or attr is None:
            continue
        if truth not in index or attr not in index:
            raise ValidationError(f"unknown technique {truth!r} or {attr!r}")
        counts[index[truth], index[attr]] += 1
    rows = []
    for i in range(3):
        total = counts[i].sum()
        if total == 0:
            rows.append(None)
        else:
            rows.append(tuple(100.0 * counts[i] / total))
    return ConfusionMatrix(MANIPULATIONS, counts, tuple(rows))


def svg_bar_chart(
    path: str | Path,
    categories: Sequence[str],
    series: dict[str, Sequence[float]],
    title: str = "",
    y_label: str = "",
    y_max: Optional[float] = None,
) -> None:
    """Write a small dependency-free grouped bar chart."""
    categories = list(categories)
    names = list(series)
    values = [list(series[n]) for n in names]
    if any(len(v) != len(categories) for v in values):
        raise ValidationError("every series must cover every category")
    width, height, margin = 640, 360, 50
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    top = y_max if y_max is not None else max(
        (max(v) for v in values if v), default=1.0
    )
    top = top if top > 0 else 1.0
    palette = ["#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4"]
    group_w = plot_w / max(1, len(categories))
    bar_w = group_w * 0.8 / max(1, len(names))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="12" y="{height / 2}" font-size="11" '
        f'transform="rotate(-90 12 {height / 2})" text-anchor="middle">{y_label}</text>',
    ]
    for ci, cat in enumerate(categories):
        x0 = margin + ci * group_w + group_w * 0.1
        for si, name in enumerate(names):
            val = values[si][ci]
            h = plot_h * max(0.0, min(val / top, 1.0))
            x = x0 + si * bar_w
            y = height - margin - h
            color = palette[si % len(palette)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                f'height="{h:.1f}" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{x0 + group_w * 0.4:.1f}" y="{height - margin + 16}" '
            f'font-size="11" text-anchor="middle">{cat}</text>'
        )
    for si, name in enumerate(names):
        color = palette[si % len(palette)]
        y = margin + 14 * si
        parts.append(f'<rect x="{width - margin - 110}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{width - margin - 95}" y="{y}" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
