"""Pure NumPy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

NAME = "numpy"


def dense_bigd(tables, rows, cols, pairs):
    tables = np.asarray(tables, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    n_ch = tables.shape[0]
    out = np.empty((len(rows) * len(cols), n_ch * len(pairs)), dtype=np.float64)

    def rect(top, left, s):
        t, l = top[:, None], left[None, :]
        return tables[:, t + s, l + s] - tables[:, t, l + s] - tables[:, t + s, l] + tables[:, t, l]

    for p, (s, xr, xc, yr, yc) in enumerate(np.asarray(pairs, dtype=np.int64)):
        lo = -((s - 1) // 2)
        sx = rect(rows + xr + lo, cols + xc + lo, s)
        sy = rect(rows + yr + lo, cols + yc + lo, s)
        out[:, p * n_ch:(p + 1) * n_ch] = ((sx - sy) / float(s * s)).reshape(n_ch, -1).T
    return out


def nearest_center(X, centers, chunk=2048):
    X = np.asarray(X, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    labels = np.empty(len(X), dtype=np.int64)
    step = max(1, chunk * 64 // max(1, len(centers)))
    for start in range(0, len(X), step):
        block = X[start:start + step]
        d2 = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels[start:start + step] = np.argmin(d2, axis=1)
    return labels


def svm_sgd(X, Y, lam, order, avg_start, bias_mult):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n_cls, d = Y.shape[0], X.shape[1]
    w = np.zeros((n_cls, d + 1))
    avg = np.zeros((n_cls, d + 1))
    xa = np.empty(d + 1)
    T = len(order)
    for t in range(1, T + 1):
        i = order[t - 1]
        xa[:d] = X[i]
        xa[d] = bias_mult
        eta = 1.0 / (lam * t + 1.0)
        y = Y[:, i]
        margin = (w @ xa) * y
        w *= 1.0 - eta * lam
        viol = margin < 1.0
        if viol.any():
            w[viol] += (eta * y[viol])[:, None] * xa[None, :]
        if t > avg_start:
            avg += (w - avg) / (t - avg_start)
    return w if avg_start >= T else avg
