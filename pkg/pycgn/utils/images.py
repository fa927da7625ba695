"""PNG image grids."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision.utils import make_grid

GRID_PADDING = 2


def grid_array(images: torch.Tensor, nrow: int, padding: int = GRID_PADDING) -> np.ndarray:
    """Tile B x C x H x W images in [0, 1] into an H' x W' x 3 uint8 array.

    Single channel inputs are repeated to RGB. The result is
    (rows * (H + padding) + padding) x (nrow * (W + padding) + padding).
    """
    images = images.detach().float().cpu().clamp(0, 1)
    if images.shape[1] == 1:
        images = images.repeat(1, 3, 1, 1)
    grid = make_grid(images, nrow=nrow, padding=padding, pad_value=1.0)
    return (grid.permute(1, 2, 0).numpy() * 255).round().astype(np.uint8)


def save_image_grid(images: torch.Tensor, path: str | Path, nrow: int, padding: int = GRID_PADDING) -> Path:
    """Write images as one PNG grid with nrow images per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(grid_array(images, nrow, padding)).save(path, format="PNG")
    return path
