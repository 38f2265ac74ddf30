"""Per-video conversion into the detector pipeline's input artifacts.

For each video the adapter writes, under ``out_dir/<video_id>/``:

* ``frames/<k>.pgm`` plus ``frames/meta.json`` carrying the frame rate,
* ``landmarks.jsonl`` with one 68-point record per frame,
* ``adapter.json`` with the status, the first-frame face box in
  ``top:left:height:width`` form, and detector metadata.

A batch run also emits ``batch_summary.json`` at the output root.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .decode import DecodeError, open_video
from .detect import FaceCandidate, get_detector

log = logging.getLogger(__name__)


@dataclass
class AdapterOutput:
    video_id: str
    status: str                      # "ok" | "failed"
    reason: str = ""
    frames_dir: Optional[str] = None
    landmarks_path: Optional[str] = None
    initial_box: Optional[str] = None
    frame_count: int = 0
    fps: float = 0.0
    fallback_frames: int = 0         # frames that reused the previous landmarks
    detector: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _write_pgm(path: Path, image: np.ndarray) -> None:
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode()
    path.write_bytes(header + image.astype(np.uint8).tobytes())


def _clamp_box(box: tuple[int, int, int, int], shape) -> tuple[int, int, int, int]:
    top, left, height, width = box
    top = max(0, top)
    left = max(0, left)
    height = min(height, shape[0] - top)
    width = min(width, shape[1] - left)
    return top, left, height, width


def _pick_face(candidates: list[FaceCandidate], video_id: str) -> FaceCandidate:
    if len(candidates) > 1:
        warnings.warn(
            f"{video_id}: {len(candidates)} faces detected on the first frame; "
            "keeping the largest box",
            stacklevel=3,
        )
    return candidates[0]


def process_video(
    video_path: str | Path,
    out_dir: str | Path,
    detector=None,
    video_id: Optional[str] = None,
) -> AdapterOutput:
    """Decode one video and emit frames, landmarks, and the face box."""
    video_path = Path(video_path)
    video_id = video_id or video_path.stem
    detector = detector or get_detector()
    meta = {"backend": detector.name, "backend_version": detector.version}
    out_root = Path(out_dir) / video_id
    try:
        fps, frames = open_video(video_path)
    except DecodeError as exc:
        return AdapterOutput(video_id, "failed", reason=str(exc), detector=meta)

    frames_dir = out_root / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    landmarks_path = out_root / "landmarks.jsonl"
    initial_box: Optional[tuple[int, int, int, int]] = None
    previous: Optional[np.ndarray] = None
    fallback = 0
    count = 0
    try:
        with open(landmarks_path, "w") as lmfh:
            for index, frame in enumerate(frames):
                candidates = detector.detect(frame)
                if index == 0:
                    if not candidates:
                        return AdapterOutput(
                            video_id,
                            "failed",
                            reason="no face found on the first frame",
                            detector=meta,
                        )
                    face = _pick_face(candidates, video_id)
                    initial_box = _clamp_box(face.box, frame.shape)
                    landmarks = face.landmarks
                elif candidates:
                    landmarks = candidates[0].landmarks
                else:
                    landmarks = previous
                    fallback += 1
                previous = landmarks
                _write_pgm(frames_dir / f"{index:06d}.pgm", frame)
                lmfh.write(
                    json.dumps({"frame": index, "points": landmarks.tolist()}) + "\n"
                )
                count += 1
    except DecodeError as exc:
        return AdapterOutput(video_id, "failed", reason=str(exc), detector=meta)
    if count == 0:
        return AdapterOutput(
            video_id, "failed", reason="stream contains no frames", detector=meta
        )
    (frames_dir / "meta.json").write_text(json.dumps({"fps": fps}))
    box_text = ":".join(str(v) for v in initial_box)
    output = AdapterOutput(
        video_id,
        "ok",
        frames_dir=str(frames_dir),
        landmarks_path=str(landmarks_path),
        initial_box=box_text,
        frame_count=count,
        fps=fps,
        fallback_frames=fallback,
        detector=meta,
    )
    (out_root / "adapter.json").write_text(json.dumps(asdict(output), indent=2) + "\n")
    if fallback:
        log.warning("%s: reused previous landmarks on %d frames", video_id, fallback)
    return output


VIDEO_SUFFIXES = (".y4m", ".mp4", ".avi", ".mov", ".mkv", ".webm")


def process_batch(
    in_path: str | Path, out_dir: str | Path, detector=None
) -> list[AdapterOutput]:
    """Process one video or every video in a directory; write a summary."""
    in_path = Path(in_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if in_path.is_dir():
        videos = sorted(
            p for p in in_path.iterdir() if p.suffix.lower() in VIDEO_SUFFIXES
        )
    else:
        videos = [in_path]
    detector = detector or get_detector()
    outputs = []
    for video in videos:
        log.info("processing %s", video.name)
        outputs.append(process_video(video, out_dir, detector=detector))
    summary = {
        "detector": {"backend": detector.name, "backend_version": detector.version},
        "videos": [asdict(o) for o in outputs],
        "ok": sum(1 for o in outputs if o.ok),
        "failed": sum(1 for o in outputs if not o.ok),
    }
    (out_dir / "batch_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return outputs
