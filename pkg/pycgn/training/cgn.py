"""End-to-end training of the three mechanisms."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import NamedTuple

import torch

from ..const import ADVERSARIAL, NUM_CLASSES, RECONSTRUCTION
from ..datasets import BiasedDataset
from ..events import EventHandler, TrainingEvent
from ..exceptions import InvalidArgumentError, MaskCollapseError, NumericFailureError
from ..helpers import get_logger, seed_everything, torch_generator
from ..losses import CollapseMonitor, CollapseState, discriminator_adv_loss, is_finite, total_cgn_loss
from ..scm import LabelTriple, MechanismSet, MonolithicGenerator, ScmSample, forward_scm, sample_noise
from ..utils import MetricsLog, save_image_grid
from .batches import infinite_batches
from .cgan import require_train_split
from .checkpoint import save_checkpoint
from .config import TrainConfig
from .discriminator import ProjectionDiscriminator
from .manifest import RunManifest

_LOGGER = logging.getLogger(__name__)

CGN_COLUMNS = ("step", "loss_total", "loss_binary", "loss_mask", "loss_adv_or_rec", "mu_mask")


class CGNRun(NamedTuple):
    """Result of train_cgn."""

    mechanisms: MechanismSet
    manifest: RunManifest
    metrics: MetricsLog


def inspection_grid(mechs: MechanismSet, seed: int) -> torch.Tensor:
    """m, f, b and x_gen for one fixed noise vector and classes 0..9, stacked row-wise."""
    u = sample_noise(mechs, 1, seed, "inspection").repeat(NUM_CLASSES, 1)
    y = torch.arange(NUM_CLASSES)
    sample = forward_scm(mechs, u, LabelTriple.uniform(y))
    return torch.cat([sample.m.repeat(1, 3, 1, 1), sample.f, sample.b, sample.x_gen]).cpu()


class CGNTrainer:
    """Owns the mechanisms, the discriminator and their optimizers."""

    def __init__(
        self,
        config: TrainConfig,
        events: EventHandler | None = None,
        pseudo_gt: MonolithicGenerator | None = None,
    ) -> None:
        """Set up a run.

        Args:
            config (TrainConfig): Validated on construction.
            events (EventHandler, optional): Listener for training events.
            pseudo_gt (MonolithicGenerator, optional): Frozen cGAN, required in
                reconstruction mode.

        Raises:
            InvalidArgumentError: Reconstruction mode without a pseudo_gt generator.
        """
        self.config = config.validate()
        self.events = events or EventHandler()
        self._log = get_logger("pycgn")

        if config.mode == RECONSTRUCTION and pseudo_gt is None:
            raise InvalidArgumentError("reconstruction mode needs a frozen cGAN checkpoint")

        seed_everything(config.seed)
        self.device = torch.device(config.device)
        self.mechs = MechanismSet(noise_dim=config.noise_dim, shared_noise=config.shared_noise).to(self.device)
        self.discriminator = ProjectionDiscriminator().to(self.device)
        self.pseudo_gt = pseudo_gt.to(self.device).eval() if pseudo_gt is not None else None
        if self.pseudo_gt is not None:
            self.pseudo_gt.requires_grad_(False)

        opt = config.optimizer
        betas = tuple(opt.betas)
        self.opt_g = torch.optim.Adam(
            [
                {"params": self.mechs.f_shape.parameters(), "lr": opt.lr_shape},
                {"params": self.mechs.f_text_fg.parameters(), "lr": opt.lr_texture},
                {"params": self.mechs.f_text_bg.parameters(), "lr": opt.lr_texture},
            ],
            betas=betas,
        )
        self.opt_d = torch.optim.Adam(self.discriminator.parameters(), lr=opt.lr_discriminator, betas=betas)
        self.monitor = CollapseMonitor(config.weights.tau, config.collapse_window, config.collapse_patience)

    def _pseudo_ground_truth(self, u: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            return self.pseudo_gt(u[:, : self.config.noise_dim], y)

    def _checkpoint(self, out_dir: Path, manifest: RunManifest, step: int) -> None:
        index = save_checkpoint(self.mechs, out_dir / "checkpoint", step)
        manifest.add_checkpoint("cgn", index)
        grid = save_image_grid(
            inspection_grid(self.mechs, self.config.seed), out_dir / "grids" / f"step_{step:06d}.png", NUM_CLASSES
        )
        manifest.add_artifact(f"grid_{step:06d}", grid)
        manifest.write()
        self.events.call(TrainingEvent.CHECKPOINT_SAVED, step=step, path=str(index))

    def train(
        self,
        dataset: BiasedDataset,
        out_dir: str | Path | None = None,
        manifest: RunManifest | None = None,
    ) -> CGNRun:
        """Optimize the generator objective for config.steps steps.

        Every sample feeds the same (u, y) to all three mechanisms.

        Raises:
            InvalidDatasetError: dataset is not a train split.
            MaskCollapseError: The mask collapsed for collapse_patience windows in a row.
            NumericFailureError: A loss turned non-finite.
        """
        logger = self._log.getChild("Train_CGN")
        require_train_split(dataset)
        cfg = self.config
        out_dir = Path(out_dir) if out_dir is not None else None
        if manifest is None:
            manifest = RunManifest.start(out_dir, "cgn train", cfg.to_dict()) if out_dir else RunManifest()
        log = MetricsLog(CGN_COLUMNS, out_dir / "metrics.csv" if out_dir else None)
        if out_dir is not None:
            manifest["metrics"]["cgn"] = str(out_dir / "metrics.csv")
        started = time.monotonic()

        if cfg.steps == 0:
            logger.info("Zero steps requested, keeping the initial mechanisms")
            if out_dir is not None:
                self._checkpoint(out_dir, manifest, 0)
            manifest.finish(status="ok", steps=0, final_mu_mask=None, collapsed=False, wall_clock=0.0)
            return CGNRun(self.mechs.eval(), manifest, log)

        images, labels, _ = dataset.tensors()
        batches = infinite_batches(images, labels, batch_size=cfg.batch_size, seed=cfg.seed, tag="cgn")
        noise_gen = torch_generator(cfg.seed, "cgn-noise")
        self.mechs.train()
        self.discriminator.train()
        mu = float("nan")

        for step in range(1, cfg.steps + 1):
            x_real, y = (t.to(self.device) for t in next(batches))
            u = torch.randn(len(y), self.mechs.input_dim, generator=noise_gen).to(self.device)
            m, f, b, x_gen = self.mechs(u, y, y, y)
            sample = ScmSample(m, f, b, x_gen, LabelTriple.uniform(y), u)

            if cfg.mode == ADVERSARIAL:
                loss_d = discriminator_adv_loss(self.discriminator, x_real, x_gen, y)
                if not torch.isfinite(loss_d):
                    values = {"discriminator": loss_d.item()}
                    manifest.finish(status="numeric_failure", steps=step, breakdown=values)
                    raise NumericFailureError(f"non-finite discriminator loss at step {step}", step, values)
                self.opt_d.zero_grad()
                loss_d.backward()
                self.opt_d.step()
                total, breakdown = total_cgn_loss(sample, cfg.weights, cfg.mode, discriminator=self.discriminator)
            else:
                x_gt = self._pseudo_ground_truth(u, y)
                total, breakdown = total_cgn_loss(sample, cfg.weights, cfg.mode, x_gt=x_gt)

            if not is_finite(breakdown):
                manifest.finish(status="numeric_failure", steps=step, breakdown=breakdown)
                raise NumericFailureError(f"non-finite generator loss at step {step}", step, breakdown)

            self.opt_g.zero_grad()
            total.backward()
            self.opt_g.step()

            mu = sample.mu_mask
            log.append(
                step=step,
                loss_total=breakdown["total"],
                loss_binary=breakdown["binary"],
                loss_mask=breakdown["mask"],
                loss_adv_or_rec=breakdown["adv_or_rec"],
                mu_mask=mu,
            )
            logger.debug("step %s %s", step, breakdown)
            if step % cfg.log_every == 0:
                logger.info("step %s loss %.4f mu_mask %.3f", step, breakdown["total"], mu)
                self.events.call(TrainingEvent.STEP_LOGGED, step=step, losses=breakdown)

            state = self.monitor.push(mu)
            if state is not None and state != CollapseState.OK:
                logger.warning("Mask %s at step %s (window %s in a row)", state.label, step, self.monitor.consecutive)
                self.events.call(TrainingEvent.COLLAPSE_DETECTED, step=step, state=state.label)
                if self.monitor.should_abort:
                    manifest.finish(
                        status="collapsed",
                        steps=step,
                        final_mu_mask=mu,
                        collapsed=True,
                        collapse_state=state.label,
                        wall_clock=time.monotonic() - started,
                    )
                    raise MaskCollapseError(f"mask {state.label} at step {step}", state.label, step)

            if out_dir is not None and step % cfg.checkpoint_every == 0 and step != cfg.steps:
                self._checkpoint(out_dir, manifest, step)

        if out_dir is not None:
            self._checkpoint(out_dir, manifest, cfg.steps)
        manifest.finish(
            status="ok",
            steps=cfg.steps,
            final_mu_mask=mu,
            collapsed=False,
            wall_clock=time.monotonic() - started,
        )
        return CGNRun(self.mechs.eval(), manifest, log)


def train_cgn(
    config: TrainConfig,
    dataset: BiasedDataset,
    out_dir: str | Path | None = None,
    pseudo_gt: MonolithicGenerator | None = None,
    events: EventHandler | None = None,
    manifest: RunManifest | None = None,
) -> CGNRun:
    """Train a MechanismSet on a biased train split.

    Returns:
        CGNRun: (mechanisms in eval mode, run manifest, metrics log).
    """
    return CGNTrainer(config, events, pseudo_gt).train(dataset, out_dir, manifest)
