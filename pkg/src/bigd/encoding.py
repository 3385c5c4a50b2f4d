"""Image-level encodings of local descriptors: VLAD and improved Fisher vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ._backend import kernels
from .codebook import Codebook, GmmModel, posterior


@dataclass(frozen=True)
class EncodedImage:
    values: np.ndarray
    method: str
    label: int | None = None

    @property
    def dim(self) -> int:
        return len(self.values)


def signed_sqrt(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.sqrt(np.abs(v))


def l2_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v.copy()


def _descriptor_matrix(desc, dim: int) -> np.ndarray:
    X = np.asarray(getattr(desc, "descriptors", desc), dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("cannot encode an empty descriptor set")
    if X.shape[1] != dim:
        raise ValueError(f"descriptor dimension {X.shape[1]} does not match model dimension {dim}")
    return X


def vlad_residuals(cb: Codebook, desc, backend=None) -> np.ndarray:
    """``(K, d)`` sums of ``center - x`` over the descriptors assigned to each centre."""
    X = _descriptor_matrix(desc, cb.dim)
    k = kernels if backend is None else backend
    centers = np.ascontiguousarray(cb.centers, dtype=np.float64)
    labels = k.nearest_center(np.ascontiguousarray(X), centers)
    diffs = centers[labels] - X
    onehot = sparse.csr_matrix((np.ones(len(X)), (labels, np.arange(len(X)))), shape=(cb.K, len(X)))
    return np.asarray(onehot @ diffs)


def vlad_encode(cb: Codebook, desc, label=None, backend=None) -> EncodedImage:
    """Hard-assignment VLAD with signed square root and global L2 normalisation."""
    v = vlad_residuals(cb, desc, backend).ravel()
    return EncodedImage(l2_normalize(signed_sqrt(v)), "vlad", label)


def fisher_gradients(model: GmmModel, desc) -> tuple[np.ndarray, np.ndarray]:
    """Summed log-likelihood gradients over the descriptors.

    Returns ``(g_mean, g_prec)``, each ``(K, d)``: the derivative with
    respect to each component mean and to each diagonal precision.
    """
    X = _descriptor_matrix(desc, model.dim)
    h = posterior(model, X)
    # centre on the mixture mean to keep the expanded moments accurate
    origin = model.priors @ model.means
    Xc = X - origin
    mu = model.means - origin
    nk = h.sum(0)[:, None]
    s1 = h.T @ Xc
    s2 = h.T @ (Xc * Xc)
    g_mean = (s1 - nk * mu) / model.variances
    sq_dev = s2 - 2.0 * mu * s1 + nk * mu * mu
    g_prec = 0.5 * (nk * model.variances - sq_dev)
    return g_mean, g_prec


def fv_encode(model: GmmModel, desc, label=None, normalization: str = "fisher",
              pi_scaling: bool = False) -> EncodedImage:
    """Improved Fisher vector: all mean blocks, then all variance blocks.

    Gradients are averaged over the descriptors. With ``normalization="fisher"``
    they are whitened by the diagonal Fisher information (the mean block is
    multiplied by ``sigma``, the precision block by ``sqrt(2) / sigma^2``),
    which makes every dimension unit-free; ``"none"`` keeps the raw
    gradients. ``pi_scaling`` further divides component ``k`` by
    ``sqrt(prior_k)``. The result is signed-square-rooted and L2 normalised.
    """
    X = _descriptor_matrix(desc, model.dim)
    g_mean, g_prec = fisher_gradients(model, X)
    g_mean /= len(X)
    g_prec /= len(X)
    if normalization == "fisher":
        g_mean *= np.sqrt(model.variances)
        g_prec *= np.sqrt(2.0) / model.variances
    elif normalization != "none":
        raise ValueError(f"unknown Fisher vector normalization {normalization!r}")
    if pi_scaling:
        scale = 1.0 / np.sqrt(model.priors)[:, None]
        g_mean *= scale
        g_prec *= scale
    v = np.concatenate([g_mean.ravel(), g_prec.ravel()])
    return EncodedImage(l2_normalize(signed_sqrt(v)), "ifv", label)


def encode(model, desc, method: str, label=None, fv_normalization: str = "fisher",
           pi_scaling: bool = False) -> EncodedImage:
    if method == "vlad":
        return vlad_encode(model, desc, label)
    if method == "ifv":
        return fv_encode(model, desc, label, fv_normalization, pi_scaling)
    raise ValueError(f"unknown encoder {method!r}; expected 'vlad' or 'ifv'")
