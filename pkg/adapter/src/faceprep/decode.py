"""Video decoding to grayscale frames.

Y4M streams are parsed natively (luma plane only). Container formats
(mp4, avi, ...) go through OpenCV when it is importable. Directories of
PGM images are accepted as already-decoded input.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import numpy as np


class DecodeError(Exception):
    """The input cannot be decoded into frames."""


_CHROMA_BYTES = {
    "420": lambda w, h: 2 * ((w + 1) // 2) * ((h + 1) // 2),
    "422": lambda w, h: 2 * ((w + 1) // 2) * h,
    "444": lambda w, h: 2 * w * h,
    "mono": lambda w, h: 0,
}


def _iter_y4m(path: Path) -> tuple[float, Iterator[np.ndarray]]:
    fh = open(path, "rb")
    header = fh.readline()
    if not header.startswith(b"YUV4MPEG2"):
        fh.close()
        raise DecodeError(f"{path}: not a Y4M stream")
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
            for name in _CHROMA_BYTES:
                if value.startswith(name):
                    chroma = name
                    break
            else:
                fh.close()
                raise DecodeError(f"{path}: unsupported chroma {value}")
    if width is None or height is None or fps is None:
        fh.close()
        raise DecodeError(f"{path}: incomplete Y4M header")
    luma_bytes = width * height
    chroma_bytes = _CHROMA_BYTES[chroma](width, height)

    def frames() -> Iterator[np.ndarray]:
        index = 0
        with fh:
            while True:
                marker = fh.readline()
                if marker == b"":
                    return
                if not marker.startswith(b"FRAME"):
                    raise DecodeError(f"{path}: bad marker at frame {index}")
                luma = fh.read(luma_bytes)
                if len(luma) != luma_bytes:
                    raise DecodeError(f"{path}: truncated frame {index}")
                if len(fh.read(chroma_bytes)) != chroma_bytes:
                    raise DecodeError(f"{path}: truncated chroma {index}")
                yield np.frombuffer(luma, dtype=np.uint8).reshape(height, width).copy()
                index += 1

    return fps, frames()


def _iter_cv2(path: Path) -> tuple[float, Iterator[np.ndarray]]:
    try:
        import cv2
    except ImportError as exc:
        raise DecodeError(
            f"{path}: container decoding needs OpenCV (pip install opencv-python)"
        ) from exc
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"{path}: OpenCV cannot open this file")
    fps = capture.get(cv2.CAP_PROP_FPS)
    if not fps or fps <= 0:
        fps = 25.0

    def frames() -> Iterator[np.ndarray]:
        try:
            while True:
                ok, frame = capture.read()
                if not ok:
                    return
                if frame.ndim == 3:
                    blue = frame[:, :, 0].astype(np.float64)
                    green = frame[:, :, 1].astype(np.float64)
                    red = frame[:, :, 2].astype(np.float64)
                    luma = 0.299 * red + 0.587 * green + 0.114 * blue
                    yield np.floor(luma + 0.5).astype(np.uint8)
                else:
                    yield frame.astype(np.uint8)
        finally:
            capture.release()

    return float(fps), frames()


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DecodeError(f"{path}: truncated PGM")
        if data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise DecodeError(f"{path}: only binary PGM input is supported")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise DecodeError(f"{path}: only 8-bit PGM input is supported")
    raster = data[pos + 1 : pos + 1 + width * height]
    if len(raster) != width * height:
        raise DecodeError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def _iter_dir(path: Path) -> tuple[float, Iterator[np.ndarray]]:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise DecodeError(f"{path}: no PGM frames in directory")
    fps = 25.0
    meta = path / "meta.json"
    if meta.is_file():
        try:
            fps = float(json.loads(meta.read_text())["fps"])
        except (ValueError, KeyError, TypeError) as exc:
            raise DecodeError(f"{meta}: cannot read fps") from exc

    def frames() -> Iterator[np.ndarray]:
        for file in files:
            yield _read_pgm(file)

    return fps, frames()


def open_video(path: str | Path) -> tuple[float, Iterator[np.ndarray]]:
    """(fps, frame iterator) for a Y4M stream, container video, or PGM dir."""
    path = Path(path)
    if path.is_dir():
        return _iter_dir(path)
    if not path.is_file():
        raise DecodeError(f"{path}: no such file")
    if path.suffix.lower() == ".y4m":
        return _iter_y4m(path)
    return _iter_cv2(path)
