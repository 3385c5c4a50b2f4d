"""One-vs-rest linear SVM trained by averaged stochastic subgradient descent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray  # (n_classes, dim)
    biases: np.ndarray  # (n_classes,)
    lam: float
    class_ids: tuple
    bias_mult: float = 1.0
    train_loss: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ValueError(f"input dimension {X.shape[1]} does not match model dimension {self.dim}")
        return X @ self.weights.T + self.biases * self.bias_mult


def default_lambda(n_classes: int, n_train: int) -> float:
    return 1.0 / (n_classes * n_train)


def objective(w, b, X, y_pm, lam, bias_mult=1.0) -> float:
    """``lam / 2 * |[w, b]|^2 + mean hinge`` for one binary problem."""
    margins = y_pm * (X @ w + b * bias_mult)
    return 0.5 * lam * (w @ w + b * b) + float(np.maximum(0.0, 1.0 - margins).mean())


def svm_train(X, y, lam=None, max_iters=None, seed=0, bias_mult: float = 1.0, backend=None) -> SvmModel:
    """Train one binary SVM per class against the rest.

    Every class shares one sample order: ``ceil(max_iters / n)`` epochs,
    each a seeded permutation of the training set. The returned weights
    are the average of the iterates over the second half of training.
    ``lam`` defaults to ``1 / (n_classes * n)`` and ``max_iters`` to
    ``100 * n``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
    class_ids = tuple(sorted(set(y.tolist())))
    if len(class_ids) < 2:
        raise ValueError(f"need at least two classes, got {class_ids}")
    n = len(X)
    lam = default_lambda(len(class_ids), n) if lam is None else float(lam)
    max_iters = 100 * n if max_iters is None else int(max_iters)
    epochs = max(1, math.ceil(max_iters / n))
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    Y = np.where(y[None, :] == np.array(class_ids)[:, None], 1.0, -1.0)
    k = kernels if backend is None else backend
    W = k.svm_sgd(X, np.ascontiguousarray(Y), lam, order, len(order) // 2, float(bias_mult))
    weights, biases = W[:, :-1].copy(), W[:, -1].copy()
    loss = tuple(objective(weights[c], biases[c], X, Y[c], lam, bias_mult) for c in range(len(class_ids)))
    return SvmModel(weights, biases, lam, class_ids, float(bias_mult), loss)


def svm_predict(model: SvmModel, x):
    """Class id(s) with the highest score; ties go to the lowest class id."""
    scores = model.decision_function(x)
    ids = np.asarray(model.class_ids)[np.argmax(scores, axis=1)]
    return ids[0].item() if np.ndim(x) == 1 else ids
