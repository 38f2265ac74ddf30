"""Dynamic-texture descriptors over three orthogonal planes.

A video volume is summarized by code histograms of its three central
planes: the spatial plane (XY) plus the two space-time planes (XT, YT).
Two descriptor families are provided:

* second-order directional derivative codes in four directions, whose
  256-bin histograms per plane and direction concatenate to 3072 values
  (6144 in bidirectional temporal mode);
* the classic 8-neighbor binary codes with the 59-bin uniform mapping,
  concatenating to 177 values, kept as a comparison baseline.

The per-plane inner loops run in a compiled extension when it is
importable and otherwise in a NumPy fallback; set FACETEX_KERNELS to
``compiled`` or ``python`` to force one. Both are bit-identical.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels_py
from .errors import ParameterError, TooSmallError
from .windowing import VideoVolume

DIRECTIONS = _kernels_py.DIRECTIONS
NEIGHBOR_OFFSETS = _kernels_py.NEIGHBOR_OFFSETS

LDP_TOP_DIM = 256 * 4 * 3
LDP_TOP_DIM_BIDIRECTIONAL = 2 * LDP_TOP_DIM
LBP_TOP_DIM = 59 * 3

KIND_LDP_TOP = "ldp-top"
KIND_LBP_TOP = "lbp-top"
DESCRIPTOR_KINDS = (KIND_LDP_TOP, KIND_LBP_TOP)


class TemporalMode(str, Enum):
    """Traversal direction of the time axis before plane extraction."""

    DIRECT = "direct"
    INVERSE = "inverse"
    BIDIRECTIONAL = "bidirectional"

    @classmethod
    def coerce(cls, value: "TemporalMode | str") -> "TemporalMode":
        if isinstance(value, TemporalMode):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ParameterError(
                f"mode must be one of {[m.value for m in cls]}, got {value!r}"
            ) from None


def _load_compiled():
    try:
        from . import _kernels  # built by setup.py, optional

        return _kernels
    except ImportError:
        return None


def available_backends() -> dict:
    """Name -> kernel module for every importable backend."""
    backends = {}
    compiled = _load_compiled()
    if compiled is not None:
        backends[compiled.NAME] = compiled
    backends[_kernels_py.NAME] = _kernels_py
    return backends


def _select_backend():
    forced = os.environ.get("FACETEX_KERNELS", "").strip().lower()
    backends = available_backends()
    if forced:
        if forced not in backends:
            raise ImportError(
                f"FACETEX_KERNELS={forced!r} but that backend is unavailable"
            )
        return backends[forced]
    return backends.get("compiled", _kernels_py)


_kernels = _select_backend()

KERNEL_BACKEND = _kernels.NAME


@dataclass
class FeatureVector:
    """A descriptor of one temporal window plus its provenance."""

    values: np.ndarray
    kind: str
    mode: str
    area: str
    video_id: str = ""
    window_index: int = 0
    start_frame: int = 0
    label: Optional[int] = None
    technique: Optional[str] = None
    split: Optional[str] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def first_derivative(plane: np.ndarray, alpha: int, h: int, w: int) -> int:
    """Directional first-order derivative of a 2D array at one position."""
    if alpha not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}, got {alpha}")
    a = np.asarray(plane)
    height, width = a.shape
    if alpha == 0:
        nh, nw = h, w + 1
    elif alpha == 45:
        nh, nw = h - 1, w + 1
    elif alpha == 90:
        nh, nw = h - 1, w
    else:
        nh, nw = h - 1, w - 1
    if not (0 <= h < height and 0 <= w < width and 0 <= nh < height and 0 <= nw < width):
        raise ParameterError(
            f"derivative at ({h}, {w}) direction {alpha} reaches outside the array"
        )
    return int(a[h, w]) - int(a[nh, nw])


def ldp2_code(plane: np.ndarray, alpha: int, h: int, w: int) -> int:
    """8-bit sign-consistency code of the directional derivative field.

    Bit b is 0 when the derivative at (h, w) and at the b-th neighbor have
    strictly consistent signs (positive product) and 1 otherwise; the first
    neighbor in the comparison order is the most significant bit.
    """
    center = first_derivative(plane, alpha, h, w)
    code = 0
    for dh, dw in NEIGHBOR_OFFSETS:
        neighbor = first_derivative(plane, alpha, h + dh, w + dw)
        code = (code << 1) | (1 if center * neighbor <= 0 else 0)
    return code


def _check_plane(plane: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(plane)
    if a.ndim != 2:
        raise ParameterError("expected a 2D pixel array")
    if a.dtype != np.uint8:
        raise ParameterError("expected uint8 samples")
    return a


def ldp_code_counts(plane: np.ndarray, *, backend=None) -> np.ndarray:
    """Raw (4, 256) code counts over the plane's common validity region.

    The region rows [2, H-2] x cols [2, W-3] is the intersection of the
    in-bounds requirements of all four directions, so every directional
    histogram counts the same positions.
    """
    a = _check_plane(plane)
    height, width = a.shape
    if height < 4 or width < 5:
        raise TooSmallError(
            f"plane {height}x{width} has an empty code region (need >= 4x5)"
        )
    kern = backend if backend is not None else _kernels
    return np.asarray(kern.ldp_counts(a))


def valid_region_size(height: int, width: int) -> int:
    """Number of positions the LDP histograms count on an HxW plane."""
    return max(0, height - 3) * max(0, width - 4)


def ldp_histograms(plane: np.ndarray, *, backend=None) -> np.ndarray:
    """Four 256-bin histograms, one per direction, each L1-normalized."""
    counts = ldp_code_counts(plane, backend=backend)
    # all four directions count the same region, so the row sums are equal
    return counts.astype(np.float64) / counts.sum(axis=1, keepdims=True)


def central_planes(
    volume: VideoVolume | np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three central orthogonal slices of an (H, W, K) volume.

    Returns (XY, XT, YT): XY is the middle frame (H x W); XT fixes the
    middle row with time as its row axis (K x W); YT fixes the middle
    column with time as its column axis (H x K).
    """
    data = volume.data if isinstance(volume, VideoVolume) else np.asarray(volume)
    height, width, depth = data.shape
    xy = data[:, :, depth // 2]
    xt = data[height // 2, :, :].T
    yt = data[:, width // 2, :]
    return xy, xt, yt


def time_reverse(volume: VideoVolume) -> VideoVolume:
    """Reverse the frame order; applying it twice is the identity."""
    from dataclasses import replace

    return replace(volume, data=volume.data[:, :, ::-1])


def _as_volume(volume: VideoVolume | np.ndarray) -> VideoVolume:
    if isinstance(volume, VideoVolume):
        return volume
    return VideoVolume(np.asarray(volume), fps=1.0)


def _ldp_plane_block(data: np.ndarray, backend) -> np.ndarray:
    blocks = [
        ldp_histograms(np.ascontiguousarray(plane), backend=backend)
        for plane in central_planes(data)
    ]
    return np.concatenate([b.ravel() for b in blocks])


def ldp_top(
    volume: VideoVolume | np.ndarray,
    mode: TemporalMode | str = TemporalMode.DIRECT,
    *,
    backend=None,
) -> FeatureVector:
    """Concatenated directional-code histograms of the three central planes.

    Plane order XY, XT, YT; direction order 0, 45, 90, 135 degrees within
    each plane. Direct mode reads time forward (3072 values), inverse mode
    reads it backward, and bidirectional concatenates both (6144 values).
    """
    vol = _as_volume(volume)
    mode = TemporalMode.coerce(mode)
    forward = vol.data
    backward = vol.data[:, :, ::-1]
    if mode is TemporalMode.DIRECT:
        values = _ldp_plane_block(forward, backend)
    elif mode is TemporalMode.INVERSE:
        values = _ldp_plane_block(backward, backend)
    else:
        values = np.concatenate(
            [_ldp_plane_block(forward, backend), _ldp_plane_block(backward, backend)]
        )
    return FeatureVector(
        values,
        kind=KIND_LDP_TOP,
        mode=mode.value,
        area=vol.area,
        video_id=vol.video_id,
        window_index=vol.window_index,
        start_frame=vol.start_frame,
    )


def count_bit_transitions(code: int, bits: int = 8) -> int:
    """Circular 0/1 transitions in the binary representation of ``code``."""
    rotated = ((code << 1) | (code >> (bits - 1))) & ((1 << bits) - 1)
    return int(bin(code ^ rotated).count("1"))


_UNIFORM_BIN_MAP: Optional[np.ndarray] = None


def uniform_bin_map() -> np.ndarray:
    """Map from 8-bit code to its 59-bin uniform-pattern histogram bin.

    The 58 codes with at most two circular transitions get bins 0..57 in
    ascending code order; every other code shares the final catch-all bin.
    """
    global _UNIFORM_BIN_MAP
    if _UNIFORM_BIN_MAP is None:
        table = np.empty(256, dtype=np.uint8)
        next_bin = 0
        for code in range(256):
            if count_bit_transitions(code) <= 2:
                table[code] = next_bin
                next_bin += 1
            else:
                table[code] = 58
        assert next_bin == 58
        _UNIFORM_BIN_MAP = table
    return _UNIFORM_BIN_MAP


def lbp_code_counts(plane: np.ndarray, *, backend=None) -> np.ndarray:
    """Raw 59-bin uniform LBP counts over rows/cols [1, dim-2]."""
    a = _check_plane(plane)
    height, width = a.shape
    if height < 3 or width < 3:
        raise TooSmallError(f"plane {height}x{width} too small for 3x3 codes")
    kern = backend if backend is not None else _kernels
    return np.asarray(kern.lbp_counts(a, uniform_bin_map()))


def lbp_histogram(plane: np.ndarray, *, backend=None) -> np.ndarray:
    counts = lbp_code_counts(plane, backend=backend)
    return counts.astype(np.float64) / float(counts.sum())


def lbp_top(volume: VideoVolume | np.ndarray, *, backend=None) -> FeatureVector:
    """Concatenated 59-bin uniform LBP histograms of the central planes."""
    vol = _as_volume(volume)
    values = np.concatenate(
        [
            lbp_histogram(np.ascontiguousarray(plane), backend=backend)
            for plane in central_planes(vol.data)
        ]
    )
    return FeatureVector(
        values,
        kind=KIND_LBP_TOP,
        mode=TemporalMode.DIRECT.value,
        area=vol.area,
        video_id=vol.video_id,
        window_index=vol.window_index,
        start_frame=vol.start_frame,
    )


def extract_descriptor(
    volume: VideoVolume,
    kind: str,
    mode: TemporalMode | str = TemporalMode.DIRECT,
    *,
    backend=None,
) -> FeatureVector:
    """Dispatch on the descriptor kind."""
    if kind == KIND_LDP_TOP:
        return ldp_top(volume, mode, backend=backend)
    if kind == KIND_LBP_TOP:
        return lbp_top(volume, backend=backend)
    raise ParameterError(f"descriptor must be one of {DESCRIPTOR_KINDS}, got {kind!r}")
