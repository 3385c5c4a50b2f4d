"""Small synthetic texture corpus for smoke tests and benchmarks.

Four classes: sinusoidal gratings at 0, 45 and 90 degrees buried in
Gaussian pixel noise, plus pure uniform noise. Each grating image gets a
random phase and a small contrast jitter. The noise is what makes the
task non-trivial: clean gratings give class-pure codebook cells and the
encodings degenerate to residual noise.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

CLASS_NAMES = ("grating000", "grating045", "grating090", "noise")


def grating(size: int, angle_deg: float, period: float, phase: float, amplitude: float,
            quantize: bool = True) -> np.ndarray:
    rr, cc = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = np.deg2rad(angle_deg)
    # 0 degrees varies along columns; rounding keeps axis-aligned gratings exact
    u = cc * np.round(np.cos(theta), 12) + rr * np.round(np.sin(theta), 12)
    img = 127.5 + amplitude * np.sin(2 * np.pi * u / period + phase)
    return np.clip(np.rint(img), 0, 255) if quantize else img


def make_image(class_index: int, rng: np.random.Generator, size: int = 64, period: float = 7.3,
               amplitude: float = 40.0, noise: float = 60.0) -> np.ndarray:
    if class_index == 3:
        return rng.integers(0, 256, size=(size, size)).astype(np.float64)
    phase = rng.uniform(0, 2 * np.pi)
    a = amplitude * rng.uniform(0.9, 1.1)
    clean = grating(size, 45.0 * class_index, period, phase, a, quantize=False)
    return np.clip(np.rint(clean + rng.normal(0.0, noise, (size, size))), 0, 255)


def write_corpus(root, n_per_class: int = 40, size: int = 64, seed: int = 0) -> Path:
    """Write the corpus as ``root/<class>/<class>_NNN.png`` and return ``root``."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for ci, name in enumerate(CLASS_NAMES):
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            img = make_image(ci, rng, size)
            Image.fromarray(img.astype(np.uint8)).save(d / f"{name}_{i:03d}.png")
    return root
