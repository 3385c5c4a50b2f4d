"""Visual vocabularies: k-means codebooks and diagonal-covariance GMMs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Codebook:
    centers: np.ndarray
    # within-cluster sum of squares after every assignment step
    wcss_history: tuple = field(default=(), compare=False)

    @property
    def K(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class GmmModel:
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    variance_floor: float = 0.0
    loglik_history: tuple = field(default=(), compare=False)

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def subsample_descriptors(sets, max_n: int, seed) -> np.ndarray:
    """Uniform random rows (without replacement) pooled from descriptor sets.

    The selected rows keep their pooled order.
    """
    mats = [np.asarray(s.descriptors if hasattr(s, "descriptors") else s) for s in sets]
    mats = [m for m in mats if len(m)]
    if not mats:
        raise ValueError("no descriptors to subsample")
    pooled = np.concatenate(mats, axis=0)
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if max_n >= len(pooled):
        return pooled
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(pooled), size=max_n, replace=False))
    return pooled[idx]


def sq_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances via the expansion, clipped at zero."""
    d2 = (X * X).sum(1)[:, None] - 2.0 * (X @ centers.T) + (centers * centers).sum(1)[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def _assign(X, centers, chunk=65536):
    labels = np.empty(len(X), dtype=np.int64)
    dist = np.empty(len(X))
    for s in range(0, len(X), chunk):
        d2 = sq_distances(X[s:s + chunk], centers)
        labels[s:s + chunk] = np.argmin(d2, axis=1)
        dist[s:s + chunk] = d2[np.arange(len(d2)), labels[s:s + chunk]]
    return labels, dist


def _cluster_sums(X, labels, K):
    onehot = sparse.csr_matrix((np.ones(len(X)), (labels, np.arange(len(X)))), shape=(K, len(X)))
    return np.asarray(onehot @ X)


def _wcss(X, centers, labels) -> float:
    return float(((X - centers[labels]) ** 2).sum())


def kmeans_plusplus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, K):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen centre
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        np.minimum(closest, ((X - X[idx]) ** 2).sum(1), out=closest)
    return X[chosen].copy()


def kmeans_fit(data, K: int, max_iters: int = 100, tol: float = 1e-4, seed=0) -> Codebook:
    """Lloyd iterations from a k-means++ start.

    Stops when no centre moves by ``tol`` or more (Euclidean) or after
    ``max_iters`` updates. An emptied cluster is moved onto the point that is
    currently farthest from its own centre.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"data must be a 2-D matrix, got shape {X.shape}")
    if K < 1 or len(X) < K:
        raise ValueError(f"need at least K={K} rows, got {len(X)}")
    # distances are evaluated on centred data to limit cancellation
    shift = X.mean(0)
    Xc = X - shift
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus(X, K, rng)
    labels, _ = _assign(Xc, centers - shift)
    history = [_wcss(X, centers, labels)]
    for _ in range(max_iters):
        counts = np.bincount(labels, minlength=K)
        sums = _cluster_sums(X, labels, K)
        new = centers.copy()
        nonempty = counts > 0
        new[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if len(empty):
            resid = ((X - new[labels]) ** 2).sum(1)
            for k in empty:
                far = int(np.argmax(resid))
                new[k] = X[far]
                resid[far] = -1.0
        moved = np.sqrt(((new - centers) ** 2).sum(1)).max()
        centers = new
        labels, _ = _assign(Xc, centers - shift)
        history.append(_wcss(X, centers, labels))
        if moved < tol:
            break
    return Codebook(centers, tuple(history))


def default_variance_floor(X: np.ndarray) -> float:
    floor = 1e-4 * float(np.var(X, axis=0).mean())
    # degenerate (constant) data still needs a positive floor
    return floor if floor > 0 else 1e-8


def log_component_densities(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """``(n, K)`` matrix of ``log pi_k + log N(x | mu_k, diag(var_k))``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    prec = 1.0 / model.variances
    quad = (X * X) @ prec.T - 2.0 * X @ (model.means * prec).T + (model.means**2 * prec).sum(1)
    log_det = np.log(model.variances).sum(1)
    return np.log(model.priors) - 0.5 * (model.dim * LOG_2PI + log_det + quad)


def log_likelihood(model: GmmModel, X) -> float:
    return float(logsumexp(log_component_densities(model, X), axis=1).sum())


def posterior(model: GmmModel, x) -> np.ndarray:
    """Component responsibilities; a 1-D ``x`` gives a ``K``-vector."""
    x = np.asarray(x, dtype=np.float64)
    logp = log_component_densities(model, x)
    h = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
    return h[0] if x.ndim == 1 else h


def _m_step(X, X2, resp, floor):
    # X is globally centred, so E[x^2] - mu^2 loses little precision
    nk = np.maximum(resp.sum(0), 1e-10)
    priors = nk / nk.sum()
    means = (resp.T @ X) / nk[:, None]
    var = (resp.T @ X2) / nk[:, None] - means * means
    np.maximum(var, floor, out=var)
    return priors, means, var


def gmm_fit(data, K: int, max_iters: int = 100, tol: float = 1e-6, variance_floor=None, seed=0,
            kmeans_iters: int | None = None) -> GmmModel:
    """EM for a diagonal GMM initialised from a k-means partition.

    Iteration stops once the relative log-likelihood gain drops below ``tol``.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"data must be a 2-D matrix, got shape {X.shape}")
    if K < 1 or len(X) < K:
        raise ValueError(f"need at least K={K} rows, got {len(X)}")
    floor = default_variance_floor(X) if variance_floor is None else float(variance_floor)
    cb = kmeans_fit(X, K, max_iters if kmeans_iters is None else kmeans_iters, seed=seed)
    shift = X.mean(0)
    X = X - shift
    X2 = X * X
    centers = cb.centers - shift
    labels, _ = _assign(X, centers)
    counts = np.bincount(labels, minlength=K).astype(np.float64)
    var = np.empty_like(centers)
    for k in range(K):
        members = X[labels == k]
        var[k] = ((members - centers[k]) ** 2).mean(0) if len(members) else X2.mean(0)
    np.maximum(var, floor, out=var)
    counts = np.maximum(counts, 1.0)
    model = GmmModel(counts / counts.sum(), centers, var, floor)
    logp = log_component_densities(model, X)
    ll = float(logsumexp(logp, axis=1).sum())
    history = [ll]
    for _ in range(max_iters):
        resp = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
        model = GmmModel(*_m_step(X, X2, resp, floor), floor)
        logp = log_component_densities(model, X)
        new_ll = float(logsumexp(logp, axis=1).sum())
        history.append(new_ll)
        gain = (new_ll - ll) / max(abs(ll), 1e-300)
        ll = new_ll
        if gain < tol:
            break
    return GmmModel(model.priors, model.means + shift, model.variances, floor, tuple(history))
