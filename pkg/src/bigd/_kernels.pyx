# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics match :mod:`bigd._fallback` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

NAME = "cython"


def dense_bigd(const double[:, :, ::1] tables, const cnp.int64_t[::1] rows,
               const cnp.int64_t[::1] cols, const cnp.int64_t[:, ::1] pairs):
    cdef Py_ssize_t n_rows = rows.shape[0], n_cols = cols.shape[0]
    cdef Py_ssize_t n_pairs = pairs.shape[0], n_ch = tables.shape[0]
    out_arr = np.empty((n_rows * n_cols, n_ch * n_pairs), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, ch, k
    cdef cnp.int64_t s, lo, xt, xl, yt, yl, R, C
    cdef double area, sx, sy
    with nogil:
        for p in range(n_pairs):
            s = pairs[p, 0]
            lo = -((s - 1) // 2)
            area = <double>(s * s)
            for i in range(n_rows):
                R = rows[i]
                xt = R + pairs[p, 1] + lo
                yt = R + pairs[p, 3] + lo
                for j in range(n_cols):
                    C = cols[j]
                    xl = C + pairs[p, 2] + lo
                    yl = C + pairs[p, 4] + lo
                    k = i * n_cols + j
                    for ch in range(n_ch):
                        sx = (tables[ch, xt + s, xl + s] - tables[ch, xt, xl + s]
                              - tables[ch, xt + s, xl] + tables[ch, xt, xl])
                        sy = (tables[ch, yt + s, yl + s] - tables[ch, yt, yl + s]
                              - tables[ch, yt + s, yl] + tables[ch, yt, yl])
                        out[k, p * n_ch + ch] = (sx - sy) / area
    return out_arr


def nearest_center(const double[:, ::1] X, const double[:, ::1] centers):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], K = centers.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef Py_ssize_t i, k, j, best
    cdef double dist, diff, best_dist
    with nogil:
        for i in range(n):
            best = 0
            best_dist = INFINITY
            for k in range(K):
                dist = 0.0
                for j in range(d):
                    diff = X[i, j] - centers[k, j]
                    dist = dist + diff * diff
                if dist < best_dist:
                    best_dist = dist
                    best = k
            labels[i] = best
    return labels_arr


def svm_sgd(const double[:, ::1] X, const double[:, ::1] Y, double lam,
            const cnp.int64_t[::1] order, Py_ssize_t avg_start, double bias_mult):
    """Averaged SGD on the one-vs-rest regularised hinge loss.

    Returns ``(n_classes, d + 1)`` averaged weights, last column the bias.
    """
    cdef Py_ssize_t n_cls = Y.shape[0], d = X.shape[1], T = order.shape[0]
    w_arr = np.zeros((n_cls, d + 1), dtype=np.float64)
    avg_arr = np.zeros((n_cls, d + 1), dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] avg = avg_arr
    cdef Py_ssize_t t, c, j, i
    cdef double eta, shrink, margin, y, g, inv
    with nogil:
        for t in range(1, T + 1):
            i = order[t - 1]
            eta = 1.0 / (lam * t + 1.0)
            shrink = 1.0 - eta * lam
            for c in range(n_cls):
                y = Y[c, i]
                margin = w[c, d] * bias_mult
                for j in range(d):
                    margin = margin + w[c, j] * X[i, j]
                margin = margin * y
                for j in range(d + 1):
                    w[c, j] = w[c, j] * shrink
                if margin < 1.0:
                    g = eta * y
                    for j in range(d):
                        w[c, j] = w[c, j] + g * X[i, j]
                    w[c, d] = w[c, d] + g * bias_mult
                if t > avg_start:
                    inv = 1.0 / (t - avg_start)
                    for j in range(d + 1):
                        avg[c, j] = avg[c, j] + (w[c, j] - avg[c, j]) * inv
    if avg_start >= T:
        return w_arr
    return avg_arr
