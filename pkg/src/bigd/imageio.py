"""Grayscale image loading, resizing and the dense patch lattice.

Images are plain 2-D ``float64`` arrays of shape ``(height, width)`` holding
intensities in ``[0, 255]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luma weights
BT601 = (0.299, 0.587, 0.114)

_SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM as PPM


class ImageFormatError(ValueError):
    """Raised when a file is readable but not a supported 8-bit PNG/PGM."""


def to_gray(img) -> np.ndarray:
    """Return ``img`` as a float64 ``(H, W)`` array.

    Accepts ``(H, W)`` arrays unchanged (copied to float64) and converts
    ``(H, W, 3)`` RGB arrays with BT.601 weights.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr.copy()
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        return BT601[0] * r + BT601[1] * g + BT601[2] * b
    raise ImageFormatError(f"cannot interpret array of shape {arr.shape} as an image")


def load_grayscale(path) -> np.ndarray:
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            mode = im.mode
            if fmt not in _SUPPORTED_FORMATS:
                raise ImageFormatError(f"{path}: unsupported format {fmt!r} (PNG or PGM expected)")
            if mode == "L":
                arr = np.asarray(im)
            elif mode in ("RGB", "RGBA", "P"):
                arr = np.asarray(im.convert("RGB"))
            elif mode in ("1", "LA"):
                arr = np.asarray(im.convert("L"))
            else:
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode!r} (8-bit expected)")
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a recognised image file") from exc
    return to_gray(arr)


def _kernel_weights(method: str, n_in: int, n_out: int):
    """Source indices and weights for 1-D resampling with half-pixel centres."""
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    if method == "bilinear":
        base = np.floor(pos).astype(np.int64)
        offsets = np.array([0, 1])
        t = pos - base
        weights = np.stack([1.0 - t, t], axis=1)
    elif method == "bicubic":
        base = np.floor(pos).astype(np.int64) - 1
        offsets = np.arange(4)
        dist = np.abs(pos[:, None] - (base[:, None] + offsets[None, :]))
        # Keys kernel, a = -0.5
        a = -0.5
        weights = np.where(
            dist <= 1,
            (a + 2) * dist**3 - (a + 3) * dist**2 + 1,
            np.where(dist < 2, a * dist**3 - 5 * a * dist**2 + 8 * a * dist - 4 * a, 0.0),
        )
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    idx = np.clip(base[:, None] + offsets[None, :], 0, n_in - 1)
    return idx, weights


def _resample_axis(arr: np.ndarray, n_out: int, axis: int, method: str) -> np.ndarray:
    n_in = arr.shape[axis]
    if n_in == n_out:
        return arr
    idx, w = _kernel_weights(method, n_in, n_out)
    moved = np.moveaxis(arr, axis, 0)
    # Accumulate deviations from the first tap so constant rows stay exact.
    ref = moved[idx[:, 0]]
    out = ref.copy()
    for k in range(1, idx.shape[1]):
        out += w[:, k].reshape((-1,) + (1,) * (moved.ndim - 1)) * (moved[idx[:, k]] - ref)
    return np.moveaxis(out, 0, axis)


def resize(img: np.ndarray, new_w: int, new_h: int, method: str = "bilinear") -> np.ndarray:
    """Resample ``img`` to ``(new_h, new_w)`` with edge clamping.

    No anti-aliasing is applied, so downsampling by large factors aliases.
    """
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be positive, got {new_w}x{new_h}")
    if method not in ("bilinear", "bicubic"):
        raise ValueError(f"unknown interpolation method {method!r}")
    out = np.asarray(img, dtype=np.float64)
    out = _resample_axis(out, new_h, 0, method)
    out = _resample_axis(out, new_w, 1, method)
    return np.array(out, dtype=np.float64, copy=True)


@dataclass(frozen=True)
class PatchGrid:
    patch_size: int
    step: int
    rows: np.ndarray
    cols: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        """``(n, 2)`` array of ``(row, col)`` centres in row-major order."""
        rr, cc = np.meshgrid(self.rows, self.cols, indexing="ij")
        return np.stack([rr.ravel(), cc.ravel()], axis=1)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def __len__(self) -> int:
        return len(self.rows) * len(self.cols)


def patch_grid(img_shape, patch_size: int, step: int) -> PatchGrid:
    """Centres of every ``patch_size`` square patch lying fully inside the image.

    ``img_shape`` may be an image array or a ``(height, width)`` tuple. The
    lattice starts at ``(L // 2, L // 2)`` and advances by ``step``.
    """
    height, width = np.shape(img_shape)[:2] if isinstance(img_shape, np.ndarray) else img_shape
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError(f"patch size must be a positive odd integer, got {patch_size}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if patch_size > min(height, width):
        raise ValueError(f"patch size {patch_size} exceeds image size {width}x{height}")
    half = patch_size // 2
    rows = np.arange(half, height - half, step, dtype=np.int64)
    cols = np.arange(half, width - half, step, dtype=np.int64)
    return PatchGrid(patch_size, step, rows, cols)
