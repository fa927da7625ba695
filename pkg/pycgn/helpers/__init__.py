"""Helpers classes."""

from __future__ import annotations

from .hashing import array_checksum, config_hash, file_sha256
from .logger import attach_run_log, get_logger
from .seeding import derive_seed, numpy_rng, seed_everything, torch_generator

__all__ = [
    array_checksum,
    attach_run_log,
    config_hash,
    derive_seed,
    file_sha256,
    get_logger,
    numpy_rng,
    seed_everything,
    torch_generator,
]
