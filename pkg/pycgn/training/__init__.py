"""Trainers for the counterfactual generator and the plain conditional GAN."""

from __future__ import annotations

from .cgan import CGANTrainer, sample_cgan, train_cgan
from .cgn import CGN_COLUMNS, CGNRun, CGNTrainer, inspection_grid, train_cgn
from .checkpoint import load_checkpoint, read_index, save_checkpoint
from .config import LossWeights, OptimizerConfig, TrainConfig, read_yaml
from .discriminator import ProjectionDiscriminator
from .manifest import RunManifest

__all__ = [
    CGANTrainer,
    CGNRun,
    CGNTrainer,
    CGN_COLUMNS,
    LossWeights,
    OptimizerConfig,
    ProjectionDiscriminator,
    RunManifest,
    TrainConfig,
    inspection_grid,
    load_checkpoint,
    read_index,
    read_yaml,
    sample_cgan,
    save_checkpoint,
    train_cgan,
    train_cgn,
]
