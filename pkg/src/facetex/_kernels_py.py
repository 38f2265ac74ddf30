"""NumPy implementations of the descriptor inner loops.

Fallback backend used when the compiled extension is unavailable. Both
backends must produce identical integer count arrays; callers validate
region sizes and do the normalization.

Conventions shared with the compiled kernels:
  * directional derivative of a plane A at (h, w):
      0 deg: A(h,w) - A(h,  w+1)     45 deg: A(h,w) - A(h-1, w+1)
     90 deg: A(h,w) - A(h-1, w)     135 deg: A(h,w) - A(h-1, w-1)
  * 8-neighbor comparison order, first entry = most significant bit:
      (h-1,w-1), (h-1,w), (h-1,w+1), (h,w+1),
      (h+1,w+1), (h+1,w), (h+1,w-1), (h,w-1)
  * LDP bit = 1 when the derivative products is <= 0 (inconsistent signs)
  * LBP bit = 1 when neighbor >= center
"""

from __future__ import annotations

import numpy as np

NAME = "python"

# (dh, dw) offsets in MSB-first order.
NEIGHBOR_OFFSETS = (
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
)

DIRECTIONS = (0, 45, 90, 135)


def _derivative_grid(plane: np.ndarray, alpha: int) -> np.ndarray:
    """Directional derivative on the full grid; undefined cells stay zero.

    Callers only read cells whose derivative exists, so the zero filler is
    never observed.
    """
    a = plane.astype(np.int32)
    d = np.zeros_like(a)
    if alpha == 0:
        d[:, :-1] = a[:, :-1] - a[:, 1:]
    elif alpha == 45:
        d[1:, :-1] = a[1:, :-1] - a[:-1, 1:]
    elif alpha == 90:
        d[1:, :] = a[1:, :] - a[:-1, :]
    elif alpha == 135:
        d[1:, 1:] = a[1:, 1:] - a[:-1, :-1]
    else:
        raise ValueError(f"unknown direction {alpha}")
    return d


def ldp_counts(plane: np.ndarray) -> np.ndarray:
    """Raw 256-bin code counts for the four directions, shape (4, 256).

    Codes are collected over the common validity region rows [2, H-2],
    cols [2, W-3] (inclusive), which the caller guarantees is non-empty.
    """
    height, width = plane.shape
    r0, r1 = 2, height - 2
    c0, c1 = 2, width - 3
    counts = np.empty((4, 256), dtype=np.int64)
    for index, alpha in enumerate(DIRECTIONS):
        grid = _derivative_grid(plane, alpha)
        center = grid[r0 : r1 + 1, c0 : c1 + 1]
        codes = np.zeros(center.shape, dtype=np.int32)
        for dh, dw in NEIGHBOR_OFFSETS:
            neighbor = grid[r0 + dh : r1 + 1 + dh, c0 + dw : c1 + 1 + dw]
            codes = (codes << 1) | (center * neighbor <= 0)
        counts[index] = np.bincount(codes.ravel(), minlength=256)
    return counts


def lbp_counts(plane: np.ndarray, bin_map: np.ndarray) -> np.ndarray:
    """Binned LBP code counts over rows/cols [1, dim-2], shape (len(set(bin_map))+...,).

    ``bin_map`` maps each of the 256 possible codes to its histogram bin;
    the output length is ``bin_map.max() + 1``.
    """
    a = plane.astype(np.int32)
    height, width = a.shape
    center = a[1 : height - 1, 1 : width - 1]
    codes = np.zeros(center.shape, dtype=np.int32)
    for dh, dw in NEIGHBOR_OFFSETS:
        neighbor = a[1 + dh : height - 1 + dh, 1 + dw : width - 1 + dw]
        codes = (codes << 1) | (neighbor >= center)
    bins = bin_map[codes.ravel()]
    return np.bincount(bins, minlength=int(bin_map.max()) + 1).astype(np.int64)
