"""Base digit sources.

The builders take a DigitSource rather than reading MNIST themselves, so the
same code colours real MNIST digits and the offline seven-segment digits
used by the test suite.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from scipy import ndimage
from torchvision import datasets

from ..const import MNIST_SIZE, NUM_CLASSES
from ..exceptions import FetchRequiredError, InvalidArgumentError
from ..helpers import numpy_rng

_LOGGER = logging.getLogger(__name__)


class DigitSource:
    """Grayscale digits in [0, 1] with their class labels."""

    def __init__(self, images: np.ndarray, labels: np.ndarray, name: str = "mnist"):
        """Initialize the source.

        Args:
            images (np.ndarray): N x H x W float array in [0, 1].
            labels (np.ndarray): N class indices.
            name (str): Recorded in dataset manifests.
        """
        images = np.asarray(images, dtype=np.float32)
        labels = np.asarray(labels, dtype=np.int64)
        if images.ndim != 3 or len(images) != len(labels):
            raise InvalidArgumentError("images must be N x H x W and match labels")

        self.images = images
        self.labels = labels
        self.name = name

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, n: int | None) -> "DigitSource":
        """First n digits (all when n is None)."""
        if n is None or n >= len(self):
            return self
        return DigitSource(self.images[:n], self.labels[:n], self.name)

    def select(self, index: np.ndarray) -> "DigitSource":
        """Digits at the given indices."""
        return DigitSource(self.images[index], self.labels[index], self.name)

    def resized(self, size: int) -> np.ndarray:
        """Bilinearly resized copy of the images."""
        if self.images.shape[1] == size and self.images.shape[2] == size:
            return self.images.copy()
        tensor = torch.from_numpy(self.images).unsqueeze(1)
        out = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
        return out.squeeze(1).clamp(0.0, 1.0).numpy()


def load_mnist(root: str | Path, train: bool = True) -> DigitSource:
    """Load MNIST from disk without downloading.

    Raises:
        FetchRequiredError: MNIST was not found below root.
    """
    try:
        data = datasets.MNIST(str(root), train=train, download=False)
    except RuntimeError as err:
        raise FetchRequiredError(
            f"MNIST not found under {root}; run 'pycgn dataset fetch --what mnist'"
        ) from err

    images = data.data.numpy().astype(np.float32) / 255.0
    labels = data.targets.numpy().astype(np.int64)
    _LOGGER.debug("Loaded %s MNIST digits from %s", len(labels), root)
    return DigitSource(images, labels, "mnist")


def fetch_mnist(root: str | Path) -> None:
    """Download MNIST into root."""
    for train in (True, False):
        datasets.MNIST(str(root), train=train, download=True)


# Segment layout on a 28x28 canvas: (row0, col0, row1, col1) rectangles.
_SEGMENTS = {
    "a": (4, 8, 6, 20),
    "b": (5, 18, 14, 20),
    "c": (14, 18, 23, 20),
    "d": (21, 8, 23, 20),
    "e": (14, 8, 23, 10),
    "f": (5, 8, 14, 10),
    "g": (13, 8, 15, 20),
}
_DIGIT_SEGMENTS = (
    "abcdef",
    "bc",
    "abged",
    "abgcd",
    "fgbc",
    "afgcd",
    "afgedc",
    "abc",
    "abcdefg",
    "abfgcd",
)


def seven_segment_template(digit: int) -> np.ndarray:
    """Binary 28x28 seven-segment rendering of a digit."""
    canvas = np.zeros((MNIST_SIZE, MNIST_SIZE), dtype=np.float32)
    for seg in _DIGIT_SEGMENTS[digit]:
        r0, c0, r1, c1 = _SEGMENTS[seg]
        canvas[r0:r1, c0:c1] = 1.0
    return canvas


def synthetic_digits(n: int, seed: int) -> DigitSource:
    """Offline stand-in for MNIST: jittered, blurred seven-segment digits.

    Labels cycle through the ten classes so every class is balanced.
    """
    rng = numpy_rng(seed, "synthetic-digits")
    labels = np.arange(n, dtype=np.int64) % NUM_CLASSES
    rng.shuffle(labels)
    templates = [seven_segment_template(k) for k in range(NUM_CLASSES)]

    images = np.empty((n, MNIST_SIZE, MNIST_SIZE), dtype=np.float32)
    shifts = rng.integers(-2, 3, size=(n, 2))
    for i, label in enumerate(labels):
        img = np.roll(templates[label], tuple(shifts[i]), axis=(0, 1))
        img = ndimage.gaussian_filter(img, 0.6)
        images[i] = np.clip(img / max(img.max(), 1e-6), 0.0, 1.0)

    return DigitSource(images, labels, "synthetic")
