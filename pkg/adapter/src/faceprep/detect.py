"""Pluggable 68-point landmark detectors.

A detector takes one grayscale frame and returns a list of face
candidates (box plus 68 landmarks in the standard layout), strongest
first. Two backends ship here:

* ``dlib``: the usual HOG detector + shape predictor, used when the dlib
  package is importable and a model file is supplied.
* ``schematic``: a fixture-grade localizer for rendered synthetic faces
  (bright face blob, dark eye and mouth blobs). It anchors a canonical
  68-point template to the detected eye/mouth triangle with an affine
  fit. It is meant for pipeline testing, not for natural images.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np


@dataclass
class FaceCandidate:
    box: tuple[int, int, int, int]  # top, left, height, width
    landmarks: np.ndarray           # (68, 2) float64, (x, y)

    @property
    def area(self) -> int:
        return self.box[2] * self.box[3]


class Detector(Protocol):
    name: str
    version: str

    def detect(self, frame: np.ndarray) -> list[FaceCandidate]: ...


def canonical_template() -> np.ndarray:
    """68 landmarks in unit face coordinates, standard index layout."""
    pts = np.zeros((68, 2))
    jaw = np.linspace(0.0, np.pi, 17)
    pts[0:17, 0] = 0.5 - 0.46 * np.cos(jaw)
    pts[0:17, 1] = 0.42 + 0.5 * np.sin(jaw)
    pts[17:22] = np.column_stack(
        [np.linspace(0.17, 0.42, 5), 0.27 - 0.05 * np.sin(np.linspace(0, np.pi, 5))]
    )
    pts[22:27] = np.column_stack(
        [np.linspace(0.58, 0.83, 5), 0.27 - 0.05 * np.sin(np.linspace(0, np.pi, 5))]
    )
    pts[27:31] = np.column_stack([np.full(4, 0.5), np.linspace(0.33, 0.52, 4)])
    pts[31:36] = np.column_stack([np.linspace(0.41, 0.59, 5), np.full(5, 0.58)])
    eye = np.array(
        [
            [-0.065, 0.0],
            [-0.03, -0.025],
            [0.03, -0.025],
            [0.065, 0.0],
            [0.03, 0.025],
            [-0.03, 0.025],
        ]
    )
    pts[36:42] = eye + [0.30, 0.36]   # subject's right eye (image left), 39 inner
    pts[42:48] = eye + [0.70, 0.36]   # subject's left eye (image right), 42 inner
    outer = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    pts[48:60] = np.column_stack(
        [0.5 - 0.13 * np.cos(outer), 0.74 + 0.06 * np.sin(outer)]
    )
    inner = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    pts[60:68] = np.column_stack(
        [0.5 - 0.065 * np.cos(inner), 0.74 + 0.03 * np.sin(inner)]
    )
    return pts


# Template anchor points used to fit the affine map: eye centers and mouth.
_RIGHT_EYE = slice(36, 42)
_LEFT_EYE = slice(42, 48)
_MOUTH = slice(48, 68)


def _connected_components(mask: np.ndarray, min_size: int = 4) -> list[np.ndarray]:
    """4-connected components of a boolean mask as (n, 2) index arrays."""
    height, width = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    components = []
    for start_h in range(height):
        row = mask[start_h]
        if not row.any():
            continue
        for start_w in np.flatnonzero(row & ~seen[start_h]):
            stack = [(start_h, int(start_w))]
            seen[start_h, start_w] = True
            pixels = []
            while stack:
                h, w = stack.pop()
                pixels.append((h, w))
                if h > 0 and mask[h - 1, w] and not seen[h - 1, w]:
                    seen[h - 1, w] = True
                    stack.append((h - 1, w))
                if h + 1 < height and mask[h + 1, w] and not seen[h + 1, w]:
                    seen[h + 1, w] = True
                    stack.append((h + 1, w))
                if w > 0 and mask[h, w - 1] and not seen[h, w - 1]:
                    seen[h, w - 1] = True
                    stack.append((h, w - 1))
                if w + 1 < width and mask[h, w + 1] and not seen[h, w + 1]:
                    seen[h, w + 1] = True
                    stack.append((h, w + 1))
            if len(pixels) >= min_size:
                components.append(np.asarray(pixels))
    return components


def _affine_from_three(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """2x3 affine matrix mapping three source points onto three targets."""
    design = np.hstack([src, np.ones((3, 1))])
    solution, *_ = np.linalg.lstsq(design, dst, rcond=None)
    return solution.T  # (2, 3)


class SchematicDetector:
    """Blob-based localizer for rendered faces on dark backgrounds."""

    name = "schematic"
    version = "1"

    def __init__(
        self, face_threshold: int = 120, feature_threshold: int = 80
    ) -> None:
        self.face_threshold = face_threshold
        self.feature_threshold = feature_threshold
        self.template = canonical_template()

    def _fit_template(self, frame, pixels) -> Optional[FaceCandidate]:
        rows = pixels[:, 0]
        cols = pixels[:, 1]
        top, bottom = int(rows.min()), int(rows.max())
        left, right = int(cols.min()), int(cols.max())
        face = frame[top : bottom + 1, left : right + 1]
        # face interior by row fill: keeps interior holes (eyes, mouth) and
        # drops the background showing in the bounding-box corners
        interior = np.zeros(face.shape, dtype=bool)
        local_rows = rows - top
        local_cols = cols - left
        for row in np.unique(local_rows):
            span = local_cols[local_rows == row]
            interior[row, span.min() : span.max() + 1] = True
        dark = (face < self.feature_threshold) & interior
        blobs = _connected_components(dark, min_size=3)
        if len(blobs) < 3:
            return None
        centers = []
        for blob in blobs:
            centers.append(
                (
                    float(blob[:, 1].mean() + left),  # x
                    float(blob[:, 0].mean() + top),   # y
                    len(blob),
                )
            )
        height = bottom - top + 1
        upper = [c for c in centers if c[1] < top + 0.55 * height]
        lower = [c for c in centers if c[1] >= top + 0.55 * height]
        if len(upper) < 2 or not lower:
            return None
        eyes = sorted(upper, key=lambda c: -c[2])[:2]
        eyes = sorted(eyes, key=lambda c: c[0])
        mouth = max(lower, key=lambda c: c[2])
        src = np.array(
            [
                self.template[_RIGHT_EYE].mean(axis=0),
                self.template[_LEFT_EYE].mean(axis=0),
                self.template[_MOUTH].mean(axis=0),
            ]
        )
        dst = np.array(
            [
                [eyes[0][0], eyes[0][1]],
                [eyes[1][0], eyes[1][1]],
                [mouth[0], mouth[1]],
            ]
        )
        affine = _affine_from_three(src, dst)
        homogeneous = np.hstack([self.template, np.ones((68, 1))])
        landmarks = homogeneous @ affine.T
        box = (top, left, height, right - left + 1)
        return FaceCandidate(box=box, landmarks=landmarks)

    def detect(self, frame: np.ndarray) -> list[FaceCandidate]:
        frame = np.asarray(frame)
        bright = frame > self.face_threshold
        components = _connected_components(bright, min_size=100)
        candidates = []
        for pixels in sorted(components, key=len, reverse=True):
            candidate = self._fit_template(frame, pixels)
            if candidate is not None:
                candidates.append(candidate)
        candidates.sort(key=lambda c: c.area, reverse=True)
        return candidates


class DlibDetector:
    """HOG face detector + 68-point shape predictor from dlib."""

    name = "dlib"

    def __init__(self, model_path: Optional[str] = None) -> None:
        import dlib

        model_path = model_path or os.environ.get("FACEPREP_DLIB_MODEL")
        if not model_path:
            raise RuntimeError(
                "dlib backend needs a shape predictor model "
                "(--dlib-model or FACEPREP_DLIB_MODEL)"
            )
        self.version = getattr(dlib, "__version__", "unknown")
        self._detector = dlib.get_frontal_face_detector()
        self._predictor = dlib.shape_predictor(model_path)

    def detect(self, frame: np.ndarray) -> list[FaceCandidate]:
        frame = np.ascontiguousarray(frame)
        candidates = []
        for rect in self._detector(frame):
            shape = self._predictor(frame, rect)
            landmarks = np.array(
                [[shape.part(i).x, shape.part(i).y] for i in range(68)],
                dtype=np.float64,
            )
            box = (
                int(rect.top()),
                int(rect.left()),
                int(rect.height()),
                int(rect.width()),
            )
            candidates.append(FaceCandidate(box=box, landmarks=landmarks))
        candidates.sort(key=lambda c: c.area, reverse=True)
        return candidates


def available_detectors() -> list[str]:
    names = ["schematic"]
    try:
        import dlib  # noqa: F401

        names.insert(0, "dlib")
    except ImportError:
        pass
    return names


def get_detector(name: str = "auto", dlib_model: Optional[str] = None):
    """Instantiate a detector backend by name."""
    if name == "auto":
        try:
            return DlibDetector(dlib_model)
        except (ImportError, RuntimeError):
            return SchematicDetector()
    if name == "schematic":
        return SchematicDetector()
    if name == "dlib":
        return DlibDetector(dlib_model)
    raise ValueError(f"unknown detector {name!r}; available: {available_detectors()}")
