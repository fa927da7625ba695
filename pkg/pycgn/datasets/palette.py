"""Class colour palettes.

Ten hues evenly spaced on the HSV circle at full saturation and value. The
background palette is rotated by half a step so no bg colour equals a fg
colour.
"""

from __future__ import annotations

import colorsys

import numpy as np

from ..const import NUM_CLASSES


def hsv_palette(offset: float = 0.0, n: int = NUM_CLASSES) -> np.ndarray:
    """Return an (n, 3) float32 RGB palette with hues (k + offset) / n."""
    return np.array(
        [colorsys.hsv_to_rgb(((k + offset) / n) % 1.0, 1.0, 1.0) for k in range(n)],
        dtype=np.float32,
    )


FG_PALETTE = hsv_palette(0.0)
BG_PALETTE = hsv_palette(0.5)


def nearest_palette_index(colors: np.ndarray, palette: np.ndarray) -> np.ndarray:
    """Index of the nearest palette colour (euclidean RGB) for each row."""
    colors = np.asarray(colors, dtype=np.float32).reshape(-1, 3)
    dist = ((colors[:, None, :] - palette[None, :, :]) ** 2).sum(axis=-1)
    return dist.argmin(axis=1).astype(np.int64)
