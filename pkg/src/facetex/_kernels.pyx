# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled descriptor inner loops.

Mirrors facetex._kernels_py exactly (same regions, neighbor order, and
bit conventions); the two backends must stay bit-identical on the raw
count arrays.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

cdef int N_DH[8]
cdef int N_DW[8]
N_DH[0] = -1; N_DW[0] = -1
N_DH[1] = -1; N_DW[1] = 0
N_DH[2] = -1; N_DW[2] = 1
N_DH[3] = 0;  N_DW[3] = 1
N_DH[4] = 1;  N_DW[4] = 1
N_DH[5] = 1;  N_DW[5] = 0
N_DH[6] = 1;  N_DW[6] = -1
N_DH[7] = 0;  N_DW[7] = -1


cdef inline int _deriv(const unsigned char[:, ::1] a, int alpha, Py_ssize_t h,
                       Py_ssize_t w) noexcept nogil:
    if alpha == 0:
        return <int> a[h, w] - <int> a[h, w + 1]
    elif alpha == 45:
        return <int> a[h, w] - <int> a[h - 1, w + 1]
    elif alpha == 90:
        return <int> a[h, w] - <int> a[h - 1, w]
    return <int> a[h, w] - <int> a[h - 1, w - 1]


def ldp_counts(const unsigned char[:, ::1] plane):
    """Raw 256-bin LDP code counts for the four directions, shape (4, 256)."""
    cdef Py_ssize_t height = plane.shape[0]
    cdef Py_ssize_t width = plane.shape[1]
    cdef Py_ssize_t r0 = 2, r1 = height - 2
    cdef Py_ssize_t c0 = 2, c1 = width - 3
    out = np.zeros((4, 256), dtype=np.int64)
    cdef long long[:, ::1] counts = out
    cdef int alphas[4]
    alphas[0] = 0; alphas[1] = 45; alphas[2] = 90; alphas[3] = 135
    cdef Py_ssize_t h, w
    cdef int index, alpha, bit, code, center, neighbor
    with nogil:
        for index in range(4):
            alpha = alphas[index]
            for h in range(r0, r1 + 1):
                for w in range(c0, c1 + 1):
                    center = _deriv(plane, alpha, h, w)
                    code = 0
                    for bit in range(8):
                        neighbor = _deriv(plane, alpha, h + N_DH[bit], w + N_DW[bit])
                        code = (code << 1) | (1 if center * neighbor <= 0 else 0)
                    counts[index, code] += 1
    return out


def lbp_counts(const unsigned char[:, ::1] plane, const unsigned char[::1] bin_map):
    """Binned LBP code counts over rows/cols [1, dim-2]."""
    cdef Py_ssize_t height = plane.shape[0]
    cdef Py_ssize_t width = plane.shape[1]
    cdef Py_ssize_t n_bins = 0
    cdef Py_ssize_t i
    for i in range(bin_map.shape[0]):
        if <Py_ssize_t> bin_map[i] + 1 > n_bins:
            n_bins = <Py_ssize_t> bin_map[i] + 1
    out = np.zeros(n_bins, dtype=np.int64)
    cdef long long[::1] counts = out
    cdef Py_ssize_t h, w
    cdef int bit, code, center
    with nogil:
        for h in range(1, height - 1):
            for w in range(1, width - 1):
                center = plane[h, w]
                code = 0
                for bit in range(8):
                    code = (code << 1) | (
                        1 if plane[h + N_DH[bit], w + N_DW[bit]] >= center else 0
                    )
                counts[bin_map[code]] += 1
    return out
