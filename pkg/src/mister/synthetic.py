"""Synthetic test patterns with controlled aliasing behavior."""

from __future__ import annotations

import numpy as np

__all__ = ["spoke_wheel", "periodic_tile"]


def spoke_wheel(size: int = 256, spokes: int = 36, supersample: int = 8) -> np.ndarray:
    """Radial spoke pattern, supersampled so the ground truth is alias-free.

    Angular frequency grows toward the center, so any decimated version is
    heavily aliased there.  Intensities span [0, 255].
    """
    n = size * supersample
    ax = (np.arange(n) + 0.5) / supersample - size / 2
    x, y = np.meshgrid(ax, ax)
    theta = np.arctan2(y, x)
    pattern = 127.5 + 127.5 * np.sign(np.sin(spokes * theta))
    radius = np.sqrt(x * x + y * y)
    pattern[radius < 6] = 127.5
    pattern[radius > size * 0.48] = 127.5
    blocks = pattern.reshape(size, supersample, size, supersample)
    return blocks.mean(axis=(1, 3))


def periodic_tile(tile: np.ndarray, reps: tuple[int, int]) -> np.ndarray:
    """Tile a block periodically (exact self-similarity at the tile period)."""
    return np.tile(np.asarray(tile, dtype=np.float64), reps)
