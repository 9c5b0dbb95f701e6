# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``_fallback`` bit for bit."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def directed_hausdorff(const double[:, ::1] a, const double[:, ::1] b):
    """sup over rows of ``a`` of the distance to the nearest row of ``b``.

    Early-break scan: once a row of ``a`` has a neighbour closer than the
    running maximum it cannot raise the maximum, so the inner scan stops.
    Squared distances are summed left to right over coordinates.
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double cmax = 0.0, cmin, acc, diff
    cdef bint broke
    for i in range(na):
        cmin = INFINITY
        broke = False
        for j in range(nb):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc = acc + diff * diff
            if acc < cmax:
                broke = True
                break
            if acc < cmin:
                cmin = acc
        if not broke and cmin > cmax:
            cmax = cmin
    return sqrt(cmax)


def im2col(const double[:, :, :, ::1] x, int k, int stride, int pad):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t OH = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t OW = (W + 2 * pad - k) // stride + 1
    out = np.zeros((B * OH * OW, C * k * k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t b, c, oh, ow, di, dj, row, col
    cdef Py_ssize_t hi, wj
    for b in range(B):
        for oh in range(OH):
            for ow in range(OW):
                row = (b * OH + oh) * OW + ow
                col = 0
                for c in range(C):
                    for di in range(k):
                        hi = oh * stride + di - pad
                        for dj in range(k):
                            wj = ow * stride + dj - pad
                            if 0 <= hi < H and 0 <= wj < W:
                                o[row, col] = x[b, c, hi, wj]
                            col += 1
    return out


def col2im(const double[:, ::1] cols, Py_ssize_t B, Py_ssize_t C, Py_ssize_t H, Py_ssize_t W,
           int k, int stride, int pad):
    cdef Py_ssize_t OH = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t OW = (W + 2 * pad - k) // stride + 1
    out = np.zeros((B, C, H, W), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t b, c, oh, ow, di, dj, row, col
    cdef Py_ssize_t hi, wj
    for b in range(B):
        for oh in range(OH):
            for ow in range(OW):
                row = (b * OH + oh) * OW + ow
                col = 0
                for c in range(C):
                    for di in range(k):
                        hi = oh * stride + di - pad
                        for dj in range(k):
                            wj = ow * stride + dj - pad
                            if 0 <= hi < H and 0 <= wj < W:
                                o[b, c, hi, wj] += cols[row, col]
                            col += 1
    return out
