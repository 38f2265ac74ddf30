"""Loaders for frame sequences, landmark tracks, and dataset manifests.

All pixel data is 8-bit grayscale. Color inputs are converted with the
BT.601 luma weights and rounded half away from zero. Loaders validate
shape invariants eagerly so downstream stages can assume consistent
inputs. Every type here is immutable after construction and safe to
share across workers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    FormatError,
    GapError,
    LoadError,
    ValidationError,
)

TECHNIQUES = ("OR", "DF", "F2F", "FSW")
MANIPULATIONS = ("DF", "F2F", "FSW")
SPLITS = ("train", "test")
AREAS = ("F", "T", "B")

MANIFEST_FIELDS = (
    "id",
    "frames_path",
    "landmarks_path",
    "initial_box",
    "label",
    "technique",
    "split",
)

# Inner eye corners and nose-bridge top in the common 68-point layout.
DEFAULT_ANCHORS = {"r": 39, "l": 42, "n": 27}

LANDMARK_POINT_COUNT = 68


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel rectangle, `top`/`left` inclusive."""

    top: int
    left: int
    height: int
    width: int

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValidationError(f"box must have positive size, got {self}")

    @classmethod
    def parse(cls, text: str) -> "Box":
        """Parse the ``top:left:height:width`` manifest syntax."""
        parts = text.strip().split(":")
        if len(parts) != 4:
            raise FormatError(f"expected top:left:height:width, got {text!r}")
        try:
            top, left, height, width = (int(p) for p in parts)
        except ValueError as exc:
            raise FormatError(f"non-integer box field in {text!r}") from exc
        return cls(top, left, height, width)

    def format(self) -> str:
        return f"{self.top}:{self.left}:{self.height}:{self.width}"


@dataclass(frozen=True)
class FrameSequence:
    """A grayscale video held as a (K, H, W) uint8 array plus its frame rate."""

    frames: np.ndarray
    fps: float
    source_id: str = ""

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 3:
            raise ValidationError("frames must be a (K, H, W) array")
        if frames.dtype != np.uint8:
            raise ValidationError("frames must be 8-bit (uint8)")
        if frames.shape[0] < 1:
            raise ValidationError("frame count must be >= 1")
        if not np.isfinite(self.fps) or self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])


@dataclass(frozen=True)
class LandmarkTrack:
    """Per-frame 68-point landmarks as a (K, 68, 2) float array of (x, y)."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 3 or pts.shape[1:] != (LANDMARK_POINT_COUNT, 2):
            raise ValidationError(
                f"landmarks must be (K, {LANDMARK_POINT_COUNT}, 2), got {pts.shape}"
            )
        if pts.shape[0] < 1:
            raise ValidationError("landmark track must cover at least one frame")
        object.__setattr__(self, "points", pts)

    @property
    def frame_count(self) -> int:
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.frame_count


@dataclass(frozen=True)
class VideoRecord:
    id: str
    frames_path: Path
    landmarks_path: Path
    initial_box: Optional[Box]
    label: int
    technique: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    """Validated list of videos with labels, techniques, and split tags."""

    records: tuple[VideoRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def select(
        self,
        split: Optional[str] = None,
        techniques: Optional[Iterable[str]] = None,
        label: Optional[int] = None,
    ) -> tuple[VideoRecord, ...]:
        wanted = None if techniques is None else set(techniques)
        out = []
        for rec in self.records:
            if split is not None and rec.split != split:
                continue
            if wanted is not None and rec.technique not in wanted:
                continue
            if label is not None and rec.label != label:
                continue
            out.append(rec)
        return tuple(out)

    def by_id(self, video_id: str) -> VideoRecord:
        for rec in self.records:
            if rec.id == video_id:
                return rec
        raise KeyError(video_id)


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (..., 3) array, rounded half away from zero."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.floor(y + 0.5).astype(np.uint8)


def _to_luma_2d(arr: np.ndarray, origin: str) -> np.ndarray:
    if arr.ndim == 2:
        if arr.dtype != np.uint8:
            raise FormatError(f"{origin}: only 8-bit samples are supported")
        return arr
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        if arr.dtype != np.uint8:
            raise FormatError(f"{origin}: only 8-bit samples are supported")
        return rgb_to_luma(arr[..., :3])
    raise FormatError(f"{origin}: unsupported image layout {arr.shape}")


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # Header tokens may be separated by arbitrary whitespace and comments.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError(f"{path}: truncated PGM header")
        if data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    magic, width_s, height_s, maxval_s = tokens
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = int(width_s), int(height_s), int(maxval_s)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if maxval <= 0 or maxval > 255:
        raise FormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + width * height]
        if len(raster) != width * height:
            raise FormatError(f"{path}: truncated PGM raster")
        return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    values = data[pos:].split()
    if len(values) != width * height:
        raise FormatError(f"{path}: expected {width * height} PGM samples")
    arr = np.array([int(v) for v in values], dtype=np.int64)
    if arr.min() < 0 or arr.max() > maxval:
        raise FormatError(f"{path}: PGM sample out of range")
    return arr.astype(np.uint8).reshape(height, width)


def _read_image(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".pgm":
        return _read_pgm(path)
    from PIL import Image

    with Image.open(path) as img:
        if img.mode == "L":
            return np.asarray(img, dtype=np.uint8)
        if img.mode in ("I", "I;16", "F"):
            raise FormatError(f"{path}: only 8-bit samples are supported")
        rgb = img.convert("RGB")
        return rgb_to_luma(np.asarray(rgb, dtype=np.uint8))


_Y4M_CHROMA_FACTORS = {
    "420": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "422": lambda w, h: 2 * ((w + 1) // 2) * h,
    "444": lambda w, h: 2 * w * h,
    "mono": lambda w, h: 0,
}


def _load_y4m(path: Path) -> FrameSequence:
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header.startswith(b"YUV4MPEG2"):
            raise FormatError(f"{path}: not a Y4M stream")
        width = height = None
        fps = None
        chroma = "420"
        for token in header.decode("ascii", "replace").split()[1:]:
            key, value = token[0], token[1:]
            if key == "W":
                width = int(value)
            elif key == "H":
                height = int(value)
            elif key == "F":
                num, den = value.split(":")
                fps = float(Fraction(int(num), int(den)))
            elif key == "C":
                for name in _Y4M_CHROMA_FACTORS:
                    if value.startswith(name):
                        chroma = name
                        break
                else:
                    raise FormatError(f"{path}: unsupported chroma mode {value}")
        if width is None or height is None:
            raise FormatError(f"{path}: Y4M header lacks W/H")
        if fps is None:
            raise FormatError(f"{path}: Y4M header lacks frame rate")
        luma_size = width * height
        chroma_size = _Y4M_CHROMA_FACTORS[chroma](width, height)
        frames = []
        index = 0
        while True:
            marker = fh.readline()
            if marker == b"":
                break
            if not marker.startswith(b"FRAME"):
                raise FormatError(f"{path}: bad frame marker at frame {index}")
            luma = fh.read(luma_size)
            if len(luma) != luma_size:
                raise LoadError(f"{path}: truncated frame {index}")
            if len(fh.read(chroma_size)) != chroma_size:
                raise LoadError(f"{path}: truncated chroma of frame {index}")
            frames.append(
                np.frombuffer(luma, dtype=np.uint8).reshape(height, width).copy()
            )
            index += 1
    if not frames:
        raise LoadError(f"{path}: Y4M stream contains no frames")
    return FrameSequence(np.stack(frames), fps, source_id=path.stem)


def _load_frame_dir(path: Path) -> FrameSequence:
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise FormatError(f"{path}: missing meta.json with the frame rate")
    try:
        meta = json.loads(meta_path.read_text())
        fps = float(meta["fps"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{meta_path}: cannot read fps") from exc
    files = sorted(
        p for p in path.iterdir() if p.suffix.lower() in (".png", ".pgm")
    )
    if not files:
        raise LoadError(f"{path}: no PNG/PGM frames found")
    frames = []
    shape = None
    for index, file in enumerate(files):
        try:
            frame = _to_luma_2d(_read_image(file), str(file))
        except Exception as exc:
            raise LoadError(
                f"{path}: corrupt frame {index} ({file.name}): {exc}"
            ) from exc
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise DimensionMismatchError(
                f"{path}: frame {index} is {frame.shape}, expected {shape}"
            )
        frames.append(frame)
    return FrameSequence(np.stack(frames), fps, source_id=path.name)


def load_frames(path: str | Path) -> FrameSequence:
    """Load a grayscale frame sequence.

    Accepts either a directory of lexicographically ordered PNG/PGM images
    plus a ``meta.json`` sidecar carrying ``fps``, or a Y4M stream whose
    luma plane is used directly.
    """
    path = Path(path)
    if path.is_dir():
        return _load_frame_dir(path)
    if path.is_file():
        if path.suffix.lower() == ".y4m":
            return _load_y4m(path)
        raise FormatError(f"{path}: expected a frame directory or .y4m stream")
    raise LoadError(f"{path}: no such file or directory")


def load_landmarks(path: str | Path) -> LandmarkTrack:
    """Load a JSON-Lines landmark file, one 68-point object per frame."""
    path = Path(path)
    entries: dict[int, np.ndarray] = {}
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise LoadError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            frame = int(obj["frame"])
            points = obj["points"]
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad landmark record") from exc
        if len(points) != LANDMARK_POINT_COUNT:
            raise FormatError(
                f"{path}: frame {frame} has {len(points)} points, "
                f"expected {LANDMARK_POINT_COUNT}"
            )
        if frame in entries:
            raise GapError(f"{path}: duplicate frame index {frame}")
        arr = np.asarray(points, dtype=np.float64)
        if arr.shape != (LANDMARK_POINT_COUNT, 2):
            raise FormatError(f"{path}: frame {frame} points are not (x, y) pairs")
        entries[frame] = arr
    if not entries:
        raise FormatError(f"{path}: empty landmark file")
    count = max(entries) + 1
    missing = sorted(set(range(count)) - set(entries))
    if missing:
        raise GapError(f"{path}: missing frame index {missing[0]}")
    return LandmarkTrack(np.stack([entries[k] for k in range(count)]))


def save_landmarks(track: LandmarkTrack, path: str | Path) -> None:
    """Write the JSON-Lines landmark format read by :func:`load_landmarks`."""
    with open(path, "w") as fh:
        for k in range(track.frame_count):
            record = {"frame": k, "points": track.points[k].tolist()}
            fh.write(json.dumps(record) + "\n")


def _validate_record(raw: dict, source: str, base: Path) -> VideoRecord:
    try:
        vid = str(raw["id"])
        frames_path = str(raw["frames_path"])
        landmarks_path = str(raw["landmarks_path"])
        box_text = str(raw.get("initial_box") or "").strip()
        label = int(raw["label"])
        technique = str(raw["technique"])
        split = str(raw["split"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed record {raw!r}") from exc
    if label not in (0, 1):
        raise ValidationError(f"{source}: id {vid}: label must be 0 or 1")
    if technique not in TECHNIQUES:
        raise ValidationError(f"{source}: id {vid}: unknown technique {technique}")
    if (label == 1) != (technique != "OR"):
        raise ValidationError(
            f"{source}: id {vid}: label {label} inconsistent with technique {technique}"
        )
    if split not in SPLITS:
        raise ValidationError(f"{source}: id {vid}: unknown split {split}")
    box = Box.parse(box_text) if box_text else None
    frames = Path(frames_path)
    landmarks = Path(landmarks_path)
    if not frames.is_absolute():
        frames = base / frames
    if not landmarks.is_absolute():
        landmarks = base / landmarks
    if not frames.exists():
        raise ValidationError(f"{source}: id {vid}: frames path {frames} not found")
    if not landmarks.exists():
        raise ValidationError(
            f"{source}: id {vid}: landmarks path {landmarks} not found"
        )
    return VideoRecord(vid, frames, landmarks, box, label, technique, split)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a CSV or JSON dataset manifest.

    Relative ``frames_path``/``landmarks_path`` entries resolve against the
    manifest's own directory; all paths must exist at load time.
    """
    path = Path(path)
    if not path.is_file():
        raise LoadError(f"{path}: no such manifest")
    base = path.parent
    raws: list[dict] = []
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if isinstance(data, dict):
            data = data.get("records")
        if not isinstance(data, list):
            raise FormatError(f"{path}: JSON manifest must be a list of records")
        raws = list(data)
    else:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            have = tuple(reader.fieldnames or ())
            if have != MANIFEST_FIELDS:
                raise FormatError(
                    f"{path}: header must be {','.join(MANIFEST_FIELDS)}"
                )
            raws = [dict(row) for row in reader]
    records = [_validate_record(raw, str(path), base) for raw in raws]
    seen: set[str] = set()
    for rec in records:
        if rec.id in seen:
            raise ValidationError(f"{path}: duplicate id {rec.id}")
        seen.add(rec.id)
    return DatasetManifest(tuple(records))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write the CSV manifest format read by :func:`load_manifest`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for rec in manifest.records:
            writer.writerow(
                [
                    rec.id,
                    str(rec.frames_path),
                    str(rec.landmarks_path),
                    rec.initial_box.format() if rec.initial_box else "",
                    rec.label,
                    rec.technique,
                    rec.split,
                ]
            )
