"""Seed handling.

Every random stream in pycgn is derived from a run seed plus a tag, so shards
and stages can be generated independently and still reproduce bit for bit.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np
import torch


def derive_seed(seed: int, *tags: str | int) -> int:
    """Derive an independent 32 bit sub-seed from a seed and a list of tags.

    Args:
        seed (int): Parent seed.
        *tags (str | int): Names identifying the consumer, e.g. "train", 0.9.

    Returns:
        int: Sub-seed in [0, 2**32).
    """
    text = ";".join([str(int(seed))] + [str(tag) for tag in tags])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def numpy_rng(seed: int, *tags: str | int) -> np.random.Generator:
    """Return a numpy Generator for the derived seed."""
    return np.random.default_rng(derive_seed(seed, *tags))


def torch_generator(seed: int, *tags: str | int) -> torch.Generator:
    """Return a CPU torch Generator for the derived seed."""
    gen = torch.Generator()
    gen.manual_seed(derive_seed(seed, *tags))
    return gen


def seed_everything(seed: int) -> None:
    """Seed the global python, numpy and torch generators."""
    random.seed(seed)
    np.random.seed(derive_seed(seed, "numpy-global"))
    torch.manual_seed(seed)
