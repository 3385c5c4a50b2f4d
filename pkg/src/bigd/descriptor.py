"""Multi-scale BIGD descriptors.

Each block pair contributes the difference of the five channel means of
its two blocks. Descriptor layout is scale-major, pair-minor and
channel-innermost, so component ``5 * p + c`` is channel ``c`` of pair
``p`` in pattern order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .gradients import N_CHANNELS, IntegralStack, integral_stack
from .imageio import patch_grid
from .sampling import SamplingPattern, block_extent


@dataclass(frozen=True)
class DescriptorSet:
    descriptors: np.ndarray
    centers: np.ndarray
    image_id: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.descriptors) != len(self.centers):
            raise ValueError(
                f"{len(self.descriptors)} descriptors but {len(self.centers)} centres for image {self.image_id!r}"
            )

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    def astype(self, dtype) -> "DescriptorSet":
        return DescriptorSet(self.descriptors.astype(dtype), self.centers, self.image_id, dict(self.meta))


def _block_sums(stack: IntegralStack, center, s: int) -> np.ndarray:
    lo, _ = block_extent(s)
    return stack.rect_sum(None, int(center[0]) + lo, int(center[1]) + lo, s, s)


def block_feature(stack: IntegralStack, center_offset, patch_center, s: int) -> np.ndarray:
    """Five channel means of the ``s`` x ``s`` block at ``patch_center + center_offset``."""
    r = int(patch_center[0]) + int(center_offset[0])
    c = int(patch_center[1]) + int(center_offset[1])
    return _block_sums(stack, (r, c), s) / float(s * s)


def pair_difference(a, b) -> np.ndarray:
    return np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)


def _check_patch(stack: IntegralStack, patch_size: int, center) -> None:
    half = patch_size // 2
    r, c = int(center[0]), int(center[1])
    if r - half < 0 or c - half < 0 or r + half >= stack.height or c + half >= stack.width:
        raise ValueError(
            f"{patch_size}x{patch_size} patch at {(r, c)} leaves the {stack.height}x{stack.width} image"
        )


def patch_descriptor(stack: IntegralStack, pattern: SamplingPattern, patch_center) -> np.ndarray:
    """Descriptor of the single patch centred at ``patch_center``.

    Differences are taken between block sums before dividing by the block
    area, which keeps constant intensity offsets exactly cancelled.
    """
    _check_patch(stack, pattern.patch_size, patch_center)
    r, c = int(patch_center[0]), int(patch_center[1])
    out = np.empty(N_CHANNELS * pattern.n_pairs)
    for p, (s, xr, xc, yr, yc) in enumerate(pattern.pairs):
        sx = _block_sums(stack, (r + xr, c + xc), s)
        sy = _block_sums(stack, (r + yr, c + yc), s)
        out[p * N_CHANNELS:(p + 1) * N_CHANNELS] = (sx - sy) / float(s * s)
    return out


def extract_dense(img, pattern: SamplingPattern, step: int, image_id: str = "", backend=None) -> DescriptorSet:
    """Descriptors for every grid patch of ``img``, in row-major grid order.

    ``img`` may be a grayscale array or a precomputed :class:`IntegralStack`.
    """
    stack = img if isinstance(img, IntegralStack) else integral_stack(img)
    grid = patch_grid((stack.height, stack.width), pattern.patch_size, step)
    k = kernels if backend is None else backend
    desc = k.dense_bigd(
        np.ascontiguousarray(stack.tables),
        np.ascontiguousarray(grid.rows),
        np.ascontiguousarray(grid.cols),
        np.ascontiguousarray(pattern.pairs),
    )
    return DescriptorSet(desc, grid.centers, image_id)
