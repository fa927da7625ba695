"""Biased MNIST variants, environments and texture banks."""

from __future__ import annotations

from .forge import (
    NO_FACTOR,
    BiasedDataset,
    build_colored_mnist,
    build_double_colored_mnist,
    build_environments,
    build_variant,
    build_wildlife_mnist,
    colorize,
)
from .mnist import DigitSource, fetch_mnist, load_mnist, synthetic_digits
from .palette import BG_PALETTE, FG_PALETTE, nearest_palette_index
from .storage import DatasetManifest, list_environments, load_dataset, save_datasets
from .textures import TextureBank, fetch_dtd, ingest_textures

__all__ = [
    BG_PALETTE,
    BiasedDataset,
    DatasetManifest,
    DigitSource,
    FG_PALETTE,
    NO_FACTOR,
    TextureBank,
    build_colored_mnist,
    build_double_colored_mnist,
    build_environments,
    build_variant,
    build_wildlife_mnist,
    colorize,
    fetch_dtd,
    fetch_mnist,
    ingest_textures,
    list_environments,
    load_dataset,
    load_mnist,
    nearest_palette_index,
    save_datasets,
    synthetic_digits,
]
