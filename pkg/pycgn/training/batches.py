"""Seeded minibatch streams."""

from __future__ import annotations

from typing import Iterator

import torch
from torch.utils.data import DataLoader, TensorDataset

from ..exceptions import InvalidDatasetError
from ..helpers import torch_generator


def make_loader(
    *tensors: torch.Tensor, batch_size: int, seed: int, tag: str = "batches", shuffle: bool = True
) -> DataLoader:
    """DataLoader over aligned tensors whose order depends only on (seed, tag)."""
    dataset = TensorDataset(*tensors)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        drop_last=shuffle and len(dataset) >= batch_size,
        generator=torch_generator(seed, tag),
    )


def infinite_batches(
    *tensors: torch.Tensor, batch_size: int, seed: int, tag: str = "batches"
) -> Iterator[list[torch.Tensor]]:
    """Reshuffled passes over the tensors, forever.

    Raises:
        InvalidDatasetError: The tensors are empty.
    """
    if not len(tensors[0]):
        raise InvalidDatasetError("cannot draw batches from an empty dataset")
    loader = make_loader(*tensors, batch_size=batch_size, seed=seed, tag=tag)
    while True:
        yield from loader
