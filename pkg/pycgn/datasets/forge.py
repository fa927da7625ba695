"""Biased MNIST variants and correlation environments."""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np
import torch
from torch.utils.data import Dataset

from ..const import (
    BINARIZE_THRESHOLD,
    COLORED,
    DEFAULT_SIGMA,
    DOUBLE_COLORED,
    IMAGE_SIZE,
    NUM_CLASSES,
    TEST,
    TRAIN,
    VARIANTS,
    WILDLIFE,
)
from ..exceptions import InvalidArgumentError, InvalidDatasetError
from ..helpers import numpy_rng
from .mnist import DigitSource
from .palette import BG_PALETTE, FG_PALETTE, nearest_palette_index
from .textures import TextureBank

_LOGGER = logging.getLogger(__name__)

NO_FACTOR = -1


class BiasedDataset(Dataset):
    """Coloured or textured digits with class and factor labels.

    factor_labels columns are (shape, fg factor, bg factor). Colored MNIST has
    a black background, so its bg column holds NO_FACTOR.
    """

    def __init__(
        self,
        images: np.ndarray,
        class_labels: np.ndarray,
        factor_labels: np.ndarray,
        correlation: float,
        split: str,
        variant: str,
        meta: dict | None = None,
    ) -> None:
        """Initialize the dataset.

        Args:
            images (np.ndarray): N x H x W x 3 float32 in [0, 1].
            class_labels (np.ndarray): N ints in {0..9}.
            factor_labels (np.ndarray): N x 3 ints.
            correlation (float): Share of class-consistent spurious factors.
            split (str): "train" or "test".
            variant (str): One of VARIANTS.
            meta (dict, optional): Generation parameters for the manifest.
        """
        self.images = np.asarray(images, dtype=np.float32)
        self.class_labels = np.asarray(class_labels, dtype=np.int64)
        self.factor_labels = np.asarray(factor_labels, dtype=np.int64)
        self.correlation = float(correlation)
        self.split = split
        self.variant = variant
        self.meta = dict(meta or {})
        self.validate()

    def validate(self) -> None:
        """Check shapes and value ranges.

        Raises:
            InvalidDatasetError: An invariant does not hold.
        """
        n = len(self.class_labels)
        if self.images.ndim != 4 or self.images.shape[0] != n or self.images.shape[3] != 3:
            raise InvalidDatasetError("images must be N x H x W x 3")
        if self.factor_labels.shape != (n, 3):
            raise InvalidDatasetError("factor_labels must be N x 3")
        if self.split not in (TRAIN, TEST):
            raise InvalidDatasetError(f"Unknown split '{self.split}'")
        if self.variant not in VARIANTS:
            raise InvalidDatasetError(f"Unknown variant '{self.variant}'")
        if not 0.0 <= self.correlation <= 1.0:
            raise InvalidDatasetError("correlation must lie in [0, 1]")
        if n and (not np.isfinite(self.images).all() or self.images.min() < 0 or self.images.max() > 1):
            raise InvalidDatasetError("pixel values must be finite and in [0, 1]")

    def __len__(self) -> int:
        return len(self.class_labels)

    def __getitem__(self, index: int):
        image = torch.from_numpy(self.images[index]).permute(2, 0, 1)
        return image, int(self.class_labels[index]), torch.from_numpy(self.factor_labels[index])

    @property
    def image_size(self) -> int:
        """Edge length of the images."""
        return self.images.shape[1]

    def tensors(self) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Images as N x 3 x H x W, class labels, factor labels."""
        return (
            torch.from_numpy(self.images).permute(0, 3, 1, 2).contiguous(),
            torch.from_numpy(self.class_labels),
            torch.from_numpy(self.factor_labels),
        )

    def agreement(self, column: int) -> float:
        """Share of samples whose factor column equals the class label."""
        if len(self) == 0:
            return 0.0
        return float((self.factor_labels[:, column] == self.class_labels).mean())


def colorize(
    digits: np.ndarray, fg_colors: np.ndarray, bg_colors: np.ndarray | None = None
) -> np.ndarray:
    """Colour digits: stroke pixels take fg * intensity, the rest take bg.

    Args:
        digits (np.ndarray): N x H x W intensities in [0, 1].
        fg_colors (np.ndarray): N x 3 stroke colours.
        bg_colors (np.ndarray, optional): N x 3 background colours; black if None.
    """
    mask = (digits >= BINARIZE_THRESHOLD)[..., None]
    fg = digits[..., None] * fg_colors[:, None, None, :]
    if bg_colors is None:
        bg = np.zeros_like(fg)
    else:
        bg = np.broadcast_to(bg_colors[:, None, None, :], fg.shape)
    return np.where(mask, fg, bg).astype(np.float32)


def consistent_mask(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask selecting floor(rho * n) random samples."""
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[: int(math.floor(rho * n))]] = True
    return mask


def assign_factors(
    labels: np.ndarray, consistent: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Spurious factor indices: class label where consistent, uniform elsewhere."""
    factors = rng.integers(0, NUM_CLASSES, size=len(labels)).astype(np.int64)
    factors[consistent] = labels[consistent]
    return factors


def _noisy_colors(
    palette: np.ndarray, index: np.ndarray, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    colors = palette[index]
    if sigma > 0:
        colors = colors + rng.normal(0.0, sigma, size=colors.shape)
    return np.clip(colors, 0.0, 1.0).astype(np.float32)


def _forge(
    variant: str,
    digits: DigitSource,
    rho: float,
    split: str,
    seed: int,
    sigma: float = DEFAULT_SIGMA,
    bank: TextureBank | None = None,
    image_size: int = IMAGE_SIZE,
) -> BiasedDataset:
    """Generate one split of one variant at correlation rho."""
    rng = numpy_rng(seed, variant, split, rho)
    labels = digits.labels
    images = digits.resized(image_size)
    n = len(labels)

    if split == TEST:
        fg_index = rng.integers(0, NUM_CLASSES, size=n).astype(np.int64)
        bg_index = rng.integers(0, NUM_CLASSES, size=n).astype(np.int64)
        color_sigma = 0.0
    else:
        # fg and bg share the consistent subset
        consistent = consistent_mask(n, rho, rng)
        fg_index = assign_factors(labels, consistent, rng)
        bg_index = assign_factors(labels, consistent, rng)
        color_sigma = sigma

    if variant == COLORED:
        fg_colors = _noisy_colors(FG_PALETTE, fg_index, color_sigma, rng)
        out = colorize(images, fg_colors)
        factors = np.stack(
            [labels, nearest_palette_index(fg_colors, FG_PALETTE), np.full(n, NO_FACTOR)],
            axis=1,
        )
    elif variant == DOUBLE_COLORED:
        fg_colors = _noisy_colors(FG_PALETTE, fg_index, color_sigma, rng)
        bg_colors = _noisy_colors(BG_PALETTE, bg_index, color_sigma, rng)
        out = colorize(images, fg_colors, bg_colors)
        factors = np.stack(
            [
                labels,
                nearest_palette_index(fg_colors, FG_PALETTE),
                nearest_palette_index(bg_colors, BG_PALETTE),
            ],
            axis=1,
        )
    elif variant == WILDLIFE:
        if bank is None:
            raise InvalidArgumentError("wildlife variant requires a texture bank")
        mask = (images >= BINARIZE_THRESHOLD)[..., None].astype(np.float32)
        out = np.empty(images.shape + (3,), dtype=np.float32)
        for i in range(n):
            fg = bank.patch("fg", fg_index[i], rng, image_size)
            bg = bank.patch("bg", bg_index[i], rng, image_size)
            out[i] = mask[i] * fg + (1 - mask[i]) * bg
        factors = np.stack([labels, fg_index, bg_index], axis=1)
    else:
        raise InvalidArgumentError(f"Unknown variant '{variant}'")

    meta = {
        "variant": variant,
        "split": split,
        "rho": rho,
        "sigma": sigma if variant != WILDLIFE else None,
        "seed": seed,
        "image_size": image_size,
        "digit_source": digits.name,
        "fg_palette": FG_PALETTE.tolist(),
        "bg_palette": BG_PALETTE.tolist() if variant == DOUBLE_COLORED else None,
    }
    if bank is not None and variant == WILDLIFE:
        meta["texture_source"] = bank.source
        meta["texture_checksums"] = bank.checksums()

    correlation = rho if split == TRAIN else 1.0 / NUM_CLASSES
    _LOGGER.debug("Forged %s %s split (rho=%s, n=%s)", variant, split, rho, n)
    return BiasedDataset(np.clip(out, 0.0, 1.0), labels, factors, correlation, split, variant, meta)


def _check_sigma(sigma: float) -> None:
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be >= 0, got {sigma}")


def build_colored_mnist(
    sigma: float,
    seed: int,
    train_digits: DigitSource,
    test_digits: DigitSource,
    image_size: int = IMAGE_SIZE,
) -> tuple[BiasedDataset, BiasedDataset]:
    """Colored MNIST: class-coloured strokes on black.

    Raises:
        InvalidArgumentError: sigma < 0.
    """
    _check_sigma(sigma)
    return (
        _forge(COLORED, train_digits, 1.0, TRAIN, seed, sigma, image_size=image_size),
        _forge(COLORED, test_digits, 1.0, TEST, seed, sigma, image_size=image_size),
    )


def build_double_colored_mnist(
    sigma: float,
    seed: int,
    train_digits: DigitSource,
    test_digits: DigitSource,
    image_size: int = IMAGE_SIZE,
) -> tuple[BiasedDataset, BiasedDataset]:
    """Double-colored MNIST: class encoded in stroke and background colour."""
    _check_sigma(sigma)
    return (
        _forge(DOUBLE_COLORED, train_digits, 1.0, TRAIN, seed, sigma, image_size=image_size),
        _forge(DOUBLE_COLORED, test_digits, 1.0, TEST, seed, sigma, image_size=image_size),
    )


def build_wildlife_mnist(
    bank: TextureBank,
    seed: int,
    train_digits: DigitSource,
    test_digits: DigitSource,
) -> tuple[BiasedDataset, BiasedDataset]:
    """Wildlife MNIST: striped digit texture over a veiny background, 32x32."""
    bank.validate()
    return (
        _forge(WILDLIFE, train_digits, 1.0, TRAIN, seed, bank=bank),
        _forge(WILDLIFE, test_digits, 1.0, TEST, seed, bank=bank),
    )


def build_variant(
    variant: str,
    seed: int,
    train_digits: DigitSource,
    test_digits: DigitSource,
    sigma: float = DEFAULT_SIGMA,
    bank: TextureBank | None = None,
) -> tuple[BiasedDataset, BiasedDataset]:
    """Dispatch to the builder of a variant."""
    if variant == COLORED:
        return build_colored_mnist(sigma, seed, train_digits, test_digits)
    if variant == DOUBLE_COLORED:
        return build_double_colored_mnist(sigma, seed, train_digits, test_digits)
    if variant == WILDLIFE:
        if bank is None:
            raise InvalidArgumentError("wildlife variant requires a texture bank")
        return build_wildlife_mnist(bank, seed, train_digits, test_digits)
    raise InvalidArgumentError(f"Unknown variant '{variant}'")


def build_environments(
    variant: str,
    rhos: Sequence[float],
    seed: int,
    digits: DigitSource,
    sigma: float = DEFAULT_SIGMA,
    bank: TextureBank | None = None,
    n_samples: int | None = None,
) -> list[BiasedDataset]:
    """One training environment per correlation level.

    The digits are split into disjoint, seed-shuffled shards, one per rho.

    Args:
        n_samples (int, optional): Samples per environment; defaults to an
            equal share of the digits.

    Raises:
        InvalidArgumentError: rhos is empty or a rho lies outside [0, 1].
    """
    if len(rhos) == 0:
        raise InvalidArgumentError("rhos must not be empty")
    for rho in rhos:
        if not 0.0 <= rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in [0, 1], got {rho}")
    if variant == WILDLIFE and bank is None:
        raise InvalidArgumentError("wildlife variant requires a texture bank")
    _check_sigma(sigma)

    order = numpy_rng(seed, "environments", variant).permutation(len(digits))
    share = n_samples or len(digits) // len(rhos)
    if share <= 0 or share * len(rhos) > len(digits):
        raise InvalidArgumentError(
            f"cannot draw {len(rhos)} environments of {share} samples from {len(digits)} digits"
        )

    envs = []
    for idx, rho in enumerate(rhos):
        shard = digits.select(order[idx * share : (idx + 1) * share])
        env = _forge(variant, shard, float(rho), TRAIN, seed + idx, sigma, bank)
        env.meta["environment"] = idx
        envs.append(env)
    return envs
