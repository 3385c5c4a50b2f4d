"""On-disk formats shared by the pipeline stages.

* Float matrices: 16-byte header (8-byte magic, uint32 rows, uint32 cols,
  little-endian) followed by row-major little-endian float32 values.
* Label files: one integer class id per line.
* Models: a header line ``<kind> <K> <d> [extra...]`` then one row of
  space-separated decimals (17 significant digits, so doubles round-trip).
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .classifier import SvmModel
from .codebook import Codebook, GmmModel

MAGIC = b"BIGDF32\x00"
_HEADER = struct.Struct("<8sII")


class FormatError(ValueError):
    pass


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_matrix(path, M) -> None:
    M = np.asarray(M, dtype="<f4")
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, M.shape[0], M.shape[1]))
        fh.write(np.ascontiguousarray(M).tobytes())


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * rows * cols
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols).astype(np.float32)


def write_labels(path, labels) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def read_labels(path) -> np.ndarray:
    out = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip():
            try:
                out.append(int(line))
            except ValueError:
                raise FormatError(f"{path}: line {i}: not an integer label: {line!r}") from None
    return np.array(out, dtype=np.int64)


def _fmt(row) -> str:
    return " ".join(f"{float(v):.17g}" for v in row)


def _write_model(path, header, rows) -> None:
    lines = [" ".join(str(h) for h in header)] + [_fmt(r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _read_model(path, kind):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty model file")
    header = lines[0].split()
    if header[0] != kind:
        raise FormatError(f"{path}: expected a {kind!r} model, found {header[0]!r}")
    try:
        rows = [np.array([float(v) for v in ln.split()]) for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return header[1:], rows


def save_codebook(cb: Codebook, path) -> None:
    _write_model(path, ("kmeans", cb.K, cb.dim), cb.centers)


def load_codebook(path) -> Codebook:
    (K, d, *_), rows = _read_model(path, "kmeans")
    centers = np.array(rows)
    if centers.shape != (int(K), int(d)):
        raise FormatError(f"{path}: header says {K}x{d}, found {centers.shape}")
    return Codebook(centers)


def save_gmm(m: GmmModel, path) -> None:
    rows = [np.concatenate([[p], mu, var]) for p, mu, var in zip(m.priors, m.means, m.variances)]
    _write_model(path, ("gmm", m.K, m.dim, f"{m.variance_floor:.17g}"), rows)


def load_gmm(path) -> GmmModel:
    (K, d, *extra), rows = _read_model(path, "gmm")
    K, d = int(K), int(d)
    M = np.array(rows)
    if M.shape != (K, 1 + 2 * d):
        raise FormatError(f"{path}: expected {K} rows of {1 + 2 * d} values, found {M.shape}")
    floor = float(extra[0]) if extra else 0.0
    return GmmModel(M[:, 0].copy(), M[:, 1:1 + d].copy(), M[:, 1 + d:].copy(), floor)


def save_svm(m: SvmModel, path) -> None:
    rows = [np.concatenate([[cid, b], w]) for cid, b, w in zip(m.class_ids, m.biases, m.weights)]
    header = ("svm", len(m.class_ids), m.dim, f"{m.lam:.17g}", f"{m.bias_mult:.17g}")
    _write_model(path, header, rows)


def load_svm(path) -> SvmModel:
    (C, d, lam, bias_mult), rows = _read_model(path, "svm")
    M = np.array(rows)
    if M.shape != (int(C), int(d) + 2):
        raise FormatError(f"{path}: expected {C} rows of {int(d) + 2} values, found {M.shape}")
    ids = tuple(int(v) for v in M[:, 0])
    return SvmModel(M[:, 2:].copy(), M[:, 1].copy(), float(lam), ids, float(bias_mult))
