"""Random multi-scale block-pair layouts.

A layout is drawn once per run and applied unchanged to every patch of
every image. Offsets are integers relative to the patch centre.

An ``s`` x ``s`` block centred at offset ``(r, c)`` covers rows
``r - (s - 1) // 2`` through ``r + s // 2`` (same for columns), i.e. for
even ``s`` the centre sits on the upper-left of the two middle pixels.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PatternFormatError(ValueError):
    """Malformed pattern file. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def block_extent(s: int) -> tuple[int, int]:
    """Offsets of the first and last row covered by a block relative to its centre."""
    return -((s - 1) // 2), s // 2


def block_inside(center, s: int, patch_size: int) -> bool:
    half = patch_size // 2
    lo, hi = block_extent(s)
    r, c = center
    return -half <= r + lo and r + hi <= half and -half <= c + lo and c + hi <= half


@dataclass(frozen=True)
class SamplingPattern:
    patch_size: int
    scales: tuple[int, ...]
    n_per_scale: int
    seed: int
    # (N, 5) int array: scale, x_row, x_col, y_row, y_col
    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 5)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        pairs.setflags(write=False)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def dim(self) -> int:
        return 5 * self.n_pairs

    def __eq__(self, other):
        if not isinstance(other, SamplingPattern):
            return NotImplemented
        return (
            self.patch_size == other.patch_size
            and self.scales == other.scales
            and self.n_per_scale == other.n_per_scale
            and self.seed == other.seed
            and np.array_equal(self.pairs, other.pairs)
        )

    def __hash__(self):
        return hash((self.patch_size, self.scales, self.n_per_scale, self.seed, self.pairs.tobytes()))

    def validate(self) -> None:
        if len(self.pairs) != len(self.scales) * self.n_per_scale:
            raise ValueError(
                f"pattern has {len(self.pairs)} pairs, expected "
                f"{len(self.scales)} scales x {self.n_per_scale} = {len(self.scales) * self.n_per_scale}"
            )
        for i, (s, xr, xc, yr, yc) in enumerate(self.pairs):
            expected = self.scales[i // self.n_per_scale]
            if s != expected:
                raise ValueError(f"pair {i} has scale {s}, expected {expected} from scale grouping")
            if not (block_inside((xr, xc), s, self.patch_size) and block_inside((yr, yc), s, self.patch_size)):
                raise ValueError(f"pair {i} has a block outside the {self.patch_size}x{self.patch_size} patch")


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def draw_coordinates(rng: np.random.Generator, patch_size: int, size) -> np.ndarray:
    """Raw (unrounded, unrejected) draws from N(0, L^2 / 25)."""
    return rng.normal(0.0, patch_size / 5.0, size=size)


def _draw_center(rng: np.random.Generator, patch_size: int, s: int) -> tuple[int, int]:
    while True:
        r, c = round_half_away(draw_coordinates(rng, patch_size, 2))
        if block_inside((r, c), s, patch_size):
            return int(r), int(c)


def sample_pattern(patch_size: int, scales, n_per_scale: int, seed: int) -> SamplingPattern:
    """Draw ``n_per_scale`` block pairs for each scale, grouped scale by scale.

    Out-of-patch centres are redrawn rather than clamped so the accepted
    centres follow a truncated isotropic Gaussian.
    """
    scales = tuple(int(s) for s in scales)
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError(f"patch size must be a positive odd integer, got {patch_size}")
    if n_per_scale < 1:
        raise ValueError(f"n_per_scale must be >= 1, got {n_per_scale}")
    if not scales:
        raise ValueError("at least one scale is required")
    for s in scales:
        if s < 1 or s > patch_size:
            raise ValueError(f"scale {s} does not fit in a {patch_size}x{patch_size} patch")
    rng = np.random.default_rng(seed)
    rows = []
    for s in scales:
        for _ in range(n_per_scale):
            x = _draw_center(rng, patch_size, s)
            y = _draw_center(rng, patch_size, s)
            rows.append((s, *x, *y))
    return SamplingPattern(patch_size, scales, n_per_scale, int(seed), np.array(rows, dtype=np.int64))


def format_pattern(p: SamplingPattern) -> str:
    lines = [f"{p.patch_size} {len(p.scales)} {p.n_per_scale} {p.seed}"]
    lines += [" ".join(str(int(v)) for v in row) for row in p.pairs]
    return "\n".join(lines) + "\n"


def save_pattern(p: SamplingPattern, path) -> None:
    Path(path).write_text(format_pattern(p))


def _ints(line: str, n: int, lineno: int) -> list[int]:
    fields = line.split()
    if len(fields) != n:
        raise PatternFormatError(f"expected {n} integers, found {len(fields)}", lineno)
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise PatternFormatError(f"non-integer field in {line.strip()!r}", lineno) from None


def parse_pattern(text: str) -> SamplingPattern:
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise PatternFormatError("empty pattern file", 1)
    lineno, header = lines[0]
    patch_size, n_scales, n_per_scale, seed = _ints(header, 4, lineno)
    if patch_size < 1 or patch_size % 2 == 0:
        raise PatternFormatError(f"patch size must be a positive odd integer, got {patch_size}", lineno)
    if n_scales < 1 or n_per_scale < 1:
        raise PatternFormatError("scale and pair counts must be >= 1", lineno)
    body = lines[1:]
    if len(body) != n_scales * n_per_scale:
        where = body[-1][0] if body else lineno
        raise PatternFormatError(
            f"header declares {n_scales} scales x {n_per_scale} pairs but file lists {len(body)} pairs", where
        )
    rows = [_ints(ln, 5, no) for no, ln in body]
    scales = []
    for k in range(n_scales):
        group = rows[k * n_per_scale:(k + 1) * n_per_scale]
        s = group[0][0]
        for (no, _), row in zip(body[k * n_per_scale:(k + 1) * n_per_scale], group):
            if row[0] != s:
                raise PatternFormatError(f"scale {row[0]} breaks the grouping of scale {s}", no)
            if not (block_inside(row[1:3], s, patch_size) and block_inside(row[3:5], s, patch_size)):
                raise PatternFormatError(f"block outside the {patch_size}x{patch_size} patch", no)
        scales.append(s)
    return SamplingPattern(patch_size, tuple(scales), n_per_scale, seed, np.array(rows, dtype=np.int64))


def load_pattern(path) -> SamplingPattern:
    return parse_pattern(Path(path).read_text())
