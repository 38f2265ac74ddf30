"""Temporal windowing of the tracked face patch and facial-area selection.

A full-length patch volume is cut into overlapping windows of ``d``
seconds with a stride of ``s`` seconds (only complete windows are kept),
or passed through whole when sliding is disabled. Area selection keeps
the full face or one half of its rows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, TooSmallError, ValidationError
from .ingest import AREAS, FrameSequence
from .tracking import RoiTrack


@dataclass(frozen=True)
class VideoVolume:
    """An (H, W, K) uint8 pixel volume with provenance tags."""

    data: np.ndarray
    fps: float
    video_id: str = ""
    window_index: int = 0
    area: str = "F"
    start_frame: int = 0

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim != 3 or data.dtype != np.uint8:
            raise ValidationError("volume data must be an (H, W, K) uint8 array")
        if data.size == 0:
            raise ValidationError("volume must be non-empty")
        if self.area not in AREAS:
            raise ValidationError(f"unknown area tag {self.area!r}")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def depth(self) -> int:
        return int(self.data.shape[2])


@dataclass(frozen=True)
class WindowingConfig:
    """Window length ``d`` and stride ``s`` in seconds."""

    d_seconds: float = 2.0
    s_seconds: float = 1.0
    sliding: bool = True

    def __post_init__(self) -> None:
        if self.d_seconds <= 0 or self.s_seconds <= 0:
            raise ParameterError("window length and stride must be positive")
        if self.sliding and self.d_seconds < self.s_seconds:
            warnings.warn(
                "stride exceeds window length; windows will skip frames",
                stacklevel=2,
            )


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def window_frame_counts(cfg: WindowingConfig, fps: float) -> tuple[int, int]:
    """(window frames, hop frames) for a frame rate; both must round >= 1."""
    window = _round_half_away(cfg.d_seconds * fps)
    hop = _round_half_away(cfg.s_seconds * fps)
    if window < 1 or hop < 1:
        raise ParameterError(
            f"window/stride round below one frame at fps {fps} "
            f"(d={cfg.d_seconds}, s={cfg.s_seconds})"
        )
    return window, hop


def extract_patch_volume(frames: FrameSequence, roi: RoiTrack) -> VideoVolume:
    """Stack the per-frame ROI crops into an (H, W, K) volume."""
    if len(roi) != frames.frame_count:
        raise ValidationError(
            f"ROI track length {len(roi)} != frame count {frames.frame_count}"
        )
    out = np.empty((roi.height, roi.width, frames.frame_count), dtype=np.uint8)
    for k in range(frames.frame_count):
        top = int(roi.tops[k])
        left = int(roi.lefts[k])
        out[:, :, k] = frames.frames[k, top : top + roi.height, left : left + roi.width]
    return VideoVolume(out, frames.fps, video_id=frames.source_id)


def partition(volume: VideoVolume, cfg: WindowingConfig) -> list[VideoVolume]:
    """Cut a volume into complete temporal windows.

    Sliding windows start at frames 0, hop, 2*hop, ...; a trailing partial
    window is discarded. Videos shorter than one window, and the
    non-sliding mode, yield the single whole-video window.
    """
    total = volume.depth
    if not cfg.sliding:
        return [replace(volume, window_index=0)]
    window, hop = window_frame_counts(cfg, volume.fps)
    if total < window:
        return [replace(volume, window_index=0)]
    count = (total - window) // hop + 1
    out = []
    for i in range(count):
        start = i * hop
        out.append(
            replace(
                volume,
                data=volume.data[:, :, start : start + window],
                window_index=i,
                start_frame=volume.start_frame + start,
            )
        )
    return out


def select_area(volume: VideoVolume, area: str) -> VideoVolume:
    """Keep the full face (F), the top half (T), or the bottom half (B).

    The middle row of an odd-height volume goes to the bottom half.
    """
    if area not in AREAS:
        raise ParameterError(f"area must be one of {AREAS}, got {area!r}")
    if area == "F":
        data = volume.data
    else:
        mid = volume.height // 2
        data = volume.data[:mid] if area == "T" else volume.data[mid:]
    if data.shape[0] < 5:
        raise TooSmallError(
            f"area {area} of a {volume.height}-row patch is below 5 rows"
        )
    return replace(volume, data=data, area=area)
