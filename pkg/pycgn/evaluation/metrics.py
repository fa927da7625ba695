"""Accuracy, colour-bias and seed statistics."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch

from ..classifiers import ClassifierModel
from ..const import COLORED
from ..datasets import BG_PALETTE, FG_PALETTE, BiasedDataset, nearest_palette_index


def evaluate(model: ClassifierModel, dataset: BiasedDataset, head: str | None = None) -> float:
    """Top-1 accuracy of one head (or the head ensemble) against class labels.

    Raises:
        InvalidArgumentError: head is not a head of model.
    """
    model.check_head(head)
    images, labels, _ = dataset.tensors()
    return model.accuracy(images, labels, head)


def estimate_colors(images: torch.Tensor) -> tuple[np.ndarray, np.ndarray]:
    """Foreground and background colour per image (B x 3 x H x W).

    The top-left pixel is taken as background; the foreground is the pixel
    farthest from it.
    """
    flat = images.detach().cpu().float().flatten(2).numpy()  # B x 3 x HW
    bg = flat[:, :, 0]
    dist = np.linalg.norm(flat - bg[:, :, None], axis=1)
    fg = flat[np.arange(len(flat)), :, dist.argmax(axis=1)]
    return fg, bg


def palette_agreement(images: torch.Tensor, labels: torch.Tensor, variant: str) -> dict[str, float]:
    """Share of images whose nearest palette colours equal their label.

    Colored MNIST has no background palette, so only "fg" is reported there.
    """
    labels = labels.cpu().numpy()
    if len(labels) == 0:
        return {"fg": 0.0} if variant == COLORED else {"fg": 0.0, "bg": 0.0}
    fg, bg = estimate_colors(images)
    rates = {"fg": float((nearest_palette_index(fg, FG_PALETTE) == labels).mean())}
    if variant != COLORED:
        rates["bg"] = float((nearest_palette_index(bg, BG_PALETTE) == labels).mean())
    return rates


def seed_stats(values: Sequence[float]) -> dict[str, float]:
    """Median, min, max, mean and std over seeds."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return {"n": 0}
    return {
        "n": int(arr.size),
        "median": float(np.median(arr)),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
    }
