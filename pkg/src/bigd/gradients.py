"""Per-pixel channel maps and their summed-area tables.

The five channels are, in order: intensity, horizontal Sobel response,
vertical Sobel response and the absolute values of the two responses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNELS = ("I", "Dx", "Dy", "ADx", "ADy")
N_CHANNELS = len(CHANNELS)


@dataclass(frozen=True)
class ChannelMaps:
    I: np.ndarray
    Dx: np.ndarray
    Dy: np.ndarray
    ADx: np.ndarray
    ADy: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.I, self.Dx, self.Dy, self.ADx, self.ADy])

    @property
    def shape(self) -> tuple[int, int]:
        return self.I.shape


def sobel(img: np.ndarray) -> ChannelMaps:
    """Unnormalised 3x3 Sobel responses with replicated borders.

    ``Dx`` correlates with ``[[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]`` and
    ``Dy`` with its transpose, so a ramp increasing to the right or
    downwards gives a positive response.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    p = np.pad(img, 1, mode="edge")
    # column differences, then vertical [1, 2, 1] smoothing
    gx = p[:, 2:] - p[:, :-2]
    dx = gx[:-2] + 2.0 * gx[1:-1] + gx[2:]
    gy = p[2:, :] - p[:-2, :]
    dy = gy[:, :-2] + 2.0 * gy[:, 1:-1] + gy[:, 2:]
    return ChannelMaps(img.copy(), dx, dy, np.abs(dx), np.abs(dy))


def summed_area(channel: np.ndarray) -> np.ndarray:
    """``(H+1, W+1)`` table with ``S[r, c] = channel[:r, :c].sum()``."""
    channel = np.asarray(channel, dtype=np.float64)
    h, w = channel.shape[-2:]
    out = np.zeros(channel.shape[:-2] + (h + 1, w + 1), dtype=np.float64)
    np.cumsum(channel, axis=-2, out=out[..., 1:, 1:])
    np.cumsum(out[..., 1:, 1:], axis=-1, out=out[..., 1:, 1:])
    return out


@dataclass(frozen=True)
class IntegralStack:
    """Summed-area tables of all five channels, shape ``(5, H+1, W+1)``."""

    tables: np.ndarray

    @property
    def height(self) -> int:
        return self.tables.shape[1] - 1

    @property
    def width(self) -> int:
        return self.tables.shape[2] - 1

    def rect_sum(self, channel, top: int, left: int, h: int, w: int):
        """Sum of a channel (or all channels if ``channel`` is None) over a rectangle."""
        if top < 0 or left < 0 or h < 1 or w < 1 or top + h > self.height or left + w > self.width:
            raise ValueError(
                f"rectangle rows [{top}, {top + h}) x cols [{left}, {left + w}) "
                f"outside {self.height}x{self.width} image"
            )
        t = self.tables if channel is None else self.tables[_channel_index(channel)]
        b, r = top + h, left + w
        return t[..., b, r] - t[..., top, r] - t[..., b, left] + t[..., top, left]


def _channel_index(channel) -> int:
    if isinstance(channel, str):
        try:
            return CHANNELS.index(channel)
        except ValueError:
            raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}") from None
    return int(channel)


def integrate(maps: ChannelMaps) -> IntegralStack:
    return IntegralStack(summed_area(maps.stack()))


def integral_stack(img: np.ndarray) -> IntegralStack:
    """Shortcut for ``integrate(sobel(img))``."""
    return integrate(sobel(img))


def block_mean(stack: IntegralStack, channel, top_left, s: int) -> float:
    """Mean of ``channel`` over the ``s`` x ``s`` block whose top-left pixel is ``top_left``."""
    r, c = top_left
    return float(stack.rect_sum(channel, int(r), int(c), s, s)) / (s * s)
