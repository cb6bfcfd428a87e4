# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: masked softmax pooling and bilinear gathering.

Semantics match epirays._kernels.fallback; keep the two in lockstep.
"""

from libc.math cimport exp, floor

import numpy as np


def attend_pool(double[:, ::1] q, double[:, :, ::1] feats,
                unsigned char[:, ::1] valid):
    """Masked softmax pooling over per-row sample features.

    q is (n, d) pre-scaled queries, feats is (n, l, d), valid is (n, l).
    Rows with no valid sample yield zeros.
    """
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    cdef Py_ssize_t l = feats.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double s, peak, wsum, wj
    cdef int nvalid
    out_arr = np.zeros((n, d), dtype=np.float64)
    score_arr = np.empty(l, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] score = score_arr
    for i in range(n):
        nvalid = 0
        peak = -1e300
        for j in range(l):
            if valid[i, j]:
                s = 0.0
                for c in range(d):
                    s += q[i, c] * feats[i, j, c]
                score[j] = s
                if s > peak:
                    peak = s
                nvalid += 1
        if nvalid == 0:
            continue
        wsum = 0.0
        for j in range(l):
            if valid[i, j]:
                wj = exp(score[j] - peak)
                score[j] = wj
                wsum += wj
        for j in range(l):
            if valid[i, j]:
                wj = score[j] / wsum
                for c in range(d):
                    out[i, c] += wj * feats[i, j, c]
    return out_arr


def bilinear_gather(double[:, :, ::1] src, double[:, :, ::1] pts,
                    unsigned char[:, ::1] valid):
    """Bilinear sampling of (h, w, d) src at (n, l, 2) positions.

    Grid-center coordinates, border clamp, zeros at invalid samples.
    """
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t d = src.shape[2]
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t l = pts.shape[1]
    cdef Py_ssize_t i, j, c, x0, y0, x1, y1
    cdef double x, y, fx, fy, w00, w01, w10, w11
    out_arr = np.zeros((n, l, d), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    for i in range(n):
        for j in range(l):
            if not valid[i, j]:
                continue
            x = pts[i, j, 0]
            y = pts[i, j, 1]
            if x < 0.0:
                x = 0.0
            elif x > w - 1:
                x = w - 1
            if y < 0.0:
                y = 0.0
            elif y > h - 1:
                y = h - 1
            x0 = <Py_ssize_t> floor(x)
            y0 = <Py_ssize_t> floor(y)
            fx = x - x0
            fy = y - y0
            if x0 > w - 1:
                x0 = w - 1
            if y0 > h - 1:
                y0 = h - 1
            x1 = x0 + 1
            y1 = y0 + 1
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            w00 = (1.0 - fy) * (1.0 - fx)
            w01 = (1.0 - fy) * fx
            w10 = fy * (1.0 - fx)
            w11 = fy * fx
            for c in range(d):
                out[i, j, c] = (w00 * src[y0, x0, c] + w01 * src[y0, x1, c]
                                + w10 * src[y1, x0, c] + w11 * src[y1, x1, c])
    return out_arr
