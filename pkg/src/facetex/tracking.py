"""Face-patch tracking: landmark motion, smoothing, and the ROI track.

The tracked rectangle keeps a constant size over the whole clip: it is
placed on frame 0 and then shifted by the smoothed mean displacement of
three stable landmarks (inner eye corners and nose-bridge top). Positions
accumulate in float and are rounded per frame, so sub-pixel motion does
not drift.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ParameterError, TooSmallError, ValidationError
from .ingest import DEFAULT_ANCHORS, Box, LandmarkTrack


@dataclass(frozen=True)
class RoiTrack:
    """Per-frame rectangle positions with a constant height and width."""

    tops: np.ndarray
    lefts: np.ndarray
    height: int
    width: int
    clamped_frames: int = 0

    def __post_init__(self) -> None:
        tops = np.asarray(self.tops, dtype=np.int64)
        lefts = np.asarray(self.lefts, dtype=np.int64)
        if tops.shape != lefts.shape or tops.ndim != 1:
            raise ValidationError("tops and lefts must be equal-length 1D arrays")
        object.__setattr__(self, "tops", tops)
        object.__setattr__(self, "lefts", lefts)

    def __len__(self) -> int:
        return int(self.tops.shape[0])

    def box(self, k: int) -> Box:
        return Box(int(self.tops[k]), int(self.lefts[k]), self.height, self.width)


def compute_motion(
    track: LandmarkTrack, indices: Optional[Mapping[str, int]] = None
) -> np.ndarray:
    """Mean (dx, dy) of the anchor landmarks between consecutive frames.

    Returns a (K-1, 2) float array. ``indices`` maps the anchor names
    ``r``, ``l``, ``n`` to landmark indices; defaults to the 68-point
    convention (39, 42, 27).
    """
    if track.frame_count < 2:
        raise TooSmallError("motion needs at least 2 frames of landmarks")
    anchors = dict(DEFAULT_ANCHORS if indices is None else indices)
    idx = [anchors[name] for name in ("r", "l", "n")]
    pts = track.points[:, idx, :]  # (K, 3, 2)
    return (pts[1:] - pts[:-1]).mean(axis=1)


def savgol_coefficients(window: int, order: int) -> np.ndarray:
    """Center-sample weights of the least-squares polynomial smoother."""
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if order < 0 or order >= window:
        raise ParameterError(f"order must satisfy 0 <= order < window, got {order}")
    half = window // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    design = np.vander(t, order + 1, increasing=True)
    # Row 0 of the pseudo-inverse evaluates the fitted polynomial at t=0.
    return np.linalg.pinv(design)[0]


def savgol_smooth(series: Sequence[float], window: int = 7, order: int = 2) -> np.ndarray:
    """Savitzky-Golay smoothing with mirror-padded ends.

    Output length equals input length. Interior samples reproduce any
    polynomial of degree <= ``order`` exactly; edge samples see the
    mirrored extension instead.
    """
    weights = savgol_coefficients(window, order)
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise ParameterError("series must be one-dimensional")
    if values.size == 0:
        raise ParameterError("series must contain at least one sample")
    half = window // 2
    padded = np.pad(values, half, mode="reflect")
    return np.correlate(padded, weights, mode="valid")


def smooth_motion(
    motion: np.ndarray, window: int = 7, order: int = 2
) -> np.ndarray:
    """Smooth the dx and dy components of a motion series independently."""
    motion = np.asarray(motion, dtype=np.float64)
    out = np.empty_like(motion)
    out[:, 0] = savgol_smooth(motion[:, 0], window, order)
    out[:, 1] = savgol_smooth(motion[:, 1], window, order)
    return out


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def build_roi_track(
    initial_box: Box,
    motion: np.ndarray,
    frame_height: int,
    frame_width: int,
) -> RoiTrack:
    """Shift ``initial_box`` by the per-frame motion vector.

    ``motion`` holds (dx, dy) rows, one per consecutive frame pair, already
    smoothed by the caller. Float positions accumulate across frames and are
    rounded half away from zero for the integer rectangles; rectangles that
    leave the frame are clamped and counted in ``clamped_frames``.
    """
    motion = np.asarray(motion, dtype=np.float64)
    if (
        initial_box.top < 0
        or initial_box.left < 0
        or initial_box.top + initial_box.height > frame_height
        or initial_box.left + initial_box.width > frame_width
    ):
        raise ValidationError(f"initial box {initial_box} outside frame bounds")
    count = motion.shape[0] + 1
    # dx shifts the left edge, dy the top edge
    float_lefts = initial_box.left + np.concatenate(([0.0], np.cumsum(motion[:, 0])))
    float_tops = initial_box.top + np.concatenate(([0.0], np.cumsum(motion[:, 1])))
    lefts = _round_half_away(float_lefts).astype(np.int64)
    tops = _round_half_away(float_tops).astype(np.int64)
    max_top = frame_height - initial_box.height
    max_left = frame_width - initial_box.width
    clamped_tops = np.clip(tops, 0, max_top)
    clamped_lefts = np.clip(lefts, 0, max_left)
    clamped = int(np.sum((clamped_tops != tops) | (clamped_lefts != lefts)))
    assert count == len(clamped_tops)
    return RoiTrack(
        clamped_tops,
        clamped_lefts,
        initial_box.height,
        initial_box.width,
        clamped_frames=clamped,
    )


def derive_initial_box(
    landmarks_frame0: np.ndarray,
    margin_factor: float = 0.0,
    frame_dims: Optional[tuple[int, int]] = None,
) -> Box:
    """Bounding box of the frame-0 landmarks, expanded by a margin.

    The margin is ``round(margin_factor * side)`` pixels per side. Used as
    a fallback when a manifest carries no detector box. ``frame_dims``
    (height, width), when given, clamps the result to the frame.
    """
    pts = np.asarray(landmarks_frame0, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("landmarks must be an (N, 2) array of (x, y)")
    xs, ys = pts[:, 0], pts[:, 1]
    if xs.max() == xs.min() or ys.max() == ys.min():
        raise ValidationError("degenerate landmark cloud, zero-area bounding box")
    top = int(np.floor(ys.min()))
    left = int(np.floor(xs.min()))
    bottom = int(np.ceil(ys.max()))
    right = int(np.ceil(xs.max()))
    height = bottom - top + 1
    width = right - left + 1
    pad_v = int(_round_half_away(np.float64(margin_factor * height)))
    pad_h = int(_round_half_away(np.float64(margin_factor * width)))
    top -= pad_v
    left -= pad_h
    height += 2 * pad_v
    width += 2 * pad_h
    if frame_dims is not None:
        frame_h, frame_w = frame_dims
        top_c = max(top, 0)
        left_c = max(left, 0)
        height = min(top + height, frame_h) - top_c
        width = min(left + width, frame_w) - left_c
        top, left = top_c, left_c
        if height < 1 or width < 1:
            raise ValidationError("landmark box lies outside the frame")
    return Box(top, left, height, width)


def dump_motion_csv(
    path: str | Path, raw: np.ndarray, smoothed: np.ndarray
) -> None:
    """Debug dump of raw and smoothed motion, one row per frame pair."""
    raw = np.asarray(raw, dtype=np.float64)
    smoothed = np.asarray(smoothed, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "dx_raw", "dy_raw", "dx_smooth", "dy_smooth"])
        for k in range(raw.shape[0]):
            writer.writerow(
                [k, raw[k, 0], raw[k, 1], smoothed[k, 0], smoothed[k, 1]]
            )
