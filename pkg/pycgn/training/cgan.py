"""Unconstrained conditional GAN: pseudo ground truth and the plain GAN baseline."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import torch

from ..const import TRAIN
from ..datasets import BiasedDataset
from ..events import EventHandler, TrainingEvent
from ..exceptions import InvalidDatasetError, NumericFailureError
from ..helpers import get_logger, seed_everything, torch_generator
from ..losses import discriminator_adv_loss, generator_adv_loss
from ..scm import MonolithicGenerator
from ..utils import MetricsLog
from .batches import infinite_batches
from .checkpoint import save_checkpoint
from .config import TrainConfig
from .discriminator import ProjectionDiscriminator

_LOGGER = logging.getLogger(__name__)

CGAN_COLUMNS = ("step", "loss_g", "loss_d")


def require_train_split(dataset: BiasedDataset) -> None:
    """Raise unless dataset is a training split."""
    if dataset.split != TRAIN:
        raise InvalidDatasetError(f"expected a train split, got '{dataset.split}'")


class CGANTrainer:
    """Alternating discriminator/generator updates of a MonolithicGenerator."""

    def __init__(self, config: TrainConfig, events: EventHandler | None = None) -> None:
        self.config = config.validate()
        self.events = events or EventHandler()
        self._log = get_logger("pycgn")

        seed_everything(config.seed)
        self.device = torch.device(config.device)
        self.generator = MonolithicGenerator(noise_dim=config.noise_dim).to(self.device)
        self.discriminator = ProjectionDiscriminator().to(self.device)

        opt = config.optimizer
        self.opt_g = torch.optim.Adam(self.generator.parameters(), lr=opt.lr_texture, betas=tuple(opt.betas))
        self.opt_d = torch.optim.Adam(
            self.discriminator.parameters(), lr=opt.lr_discriminator, betas=tuple(opt.betas)
        )

    def train(
        self, dataset: BiasedDataset, out_dir: str | Path | None = None
    ) -> tuple[MonolithicGenerator, MetricsLog]:
        """Run config.steps updates and return the generator in eval mode.

        Raises:
            InvalidDatasetError: dataset is not a train split.
            NumericFailureError: A loss turned non-finite.
        """
        logger = self._log.getChild("Train_CGAN")
        require_train_split(dataset)
        cfg = self.config
        out_dir = Path(out_dir) if out_dir is not None else None
        log = MetricsLog(CGAN_COLUMNS, out_dir / "metrics.csv" if out_dir else None)

        if cfg.steps == 0:
            logger.info("Zero steps requested, returning the untrained generator")
            if out_dir is not None:
                save_checkpoint(self.generator, out_dir / "checkpoint", 0)
            return self.generator.eval(), log

        images, labels, _ = dataset.tensors()
        batches = infinite_batches(images, labels, batch_size=cfg.batch_size, seed=cfg.seed, tag="cgan")
        noise_gen = torch_generator(cfg.seed, "cgan-noise")
        self.generator.train()
        self.discriminator.train()

        for step in range(1, cfg.steps + 1):
            x_real, y = (t.to(self.device) for t in next(batches))
            u = torch.randn(len(y), cfg.noise_dim, generator=noise_gen).to(self.device)
            x_gen = self.generator(u, y)

            # checked before each optimizer step
            loss_d = discriminator_adv_loss(self.discriminator, x_real, x_gen, y)
            values = {"loss_d": loss_d.item()}
            if not math.isfinite(values["loss_d"]):
                raise NumericFailureError(f"non-finite cGAN discriminator loss at step {step}", step, values)
            self.opt_d.zero_grad()
            loss_d.backward()
            self.opt_d.step()

            loss_g = generator_adv_loss(self.discriminator, x_gen, y)
            values["loss_g"] = loss_g.item()
            if not math.isfinite(values["loss_g"]):
                raise NumericFailureError(f"non-finite cGAN generator loss at step {step}", step, values)
            self.opt_g.zero_grad()
            loss_g.backward()
            self.opt_g.step()

            log.append(step=step, **values)
            if step % cfg.log_every == 0:
                logger.info("step %s loss_g %.4f loss_d %.4f", step, values["loss_g"], values["loss_d"])
                self.events.call(TrainingEvent.STEP_LOGGED, step=step, losses=values)
            if out_dir is not None and step % cfg.checkpoint_every == 0:
                index = save_checkpoint(self.generator, out_dir / "checkpoint", step)
                self.events.call(TrainingEvent.CHECKPOINT_SAVED, step=step, path=str(index))

        if out_dir is not None:
            save_checkpoint(self.generator, out_dir / "checkpoint", cfg.steps)
        return self.generator.eval(), log


def train_cgan(
    config: TrainConfig,
    dataset: BiasedDataset,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> tuple[MonolithicGenerator, MetricsLog]:
    """Train an unconstrained conditional generator on a biased train split."""
    return CGANTrainer(config, events).train(dataset, out_dir)


@torch.no_grad()
def sample_cgan(
    generator: MonolithicGenerator,
    n: int,
    seed: int,
    labels: torch.Tensor | None = None,
    batch_size: int = 500,
) -> tuple[torch.Tensor, torch.Tensor]:
    """n generated images and their conditioning labels (balanced if not given)."""
    device = next(generator.parameters()).device
    if labels is None:
        labels = torch.arange(n) % generator.n_classes
    noise = torch.randn(n, generator.noise_dim, generator=torch_generator(seed, "cgan-sample"))

    was_training = generator.training
    generator.eval()
    images = []
    try:
        for start in range(0, n, batch_size):
            u = noise[start : start + batch_size].to(device)
            y = labels[start : start + batch_size].to(device)
            images.append(generator(u, y).cpu())
    finally:
        generator.train(was_training)
    out = torch.cat(images) if images else torch.zeros(0, 3, generator.image_size, generator.image_size)
    return out, labels.long()
