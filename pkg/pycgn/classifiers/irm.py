"""Invariant risk minimization across correlation environments."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import autograd

from ..const import HEAD_SHAPE, IRM_LAMBDA_MAX, IRM_RAMP_FRACTION
from ..datasets import BiasedDataset
from ..events import EventHandler, TrainingEvent
from ..exceptions import InvalidArgumentError, NumericFailureError
from ..helpers import get_logger
from ..training.batches import infinite_batches
from ..utils import MetricsLog
from .config import ClassifierConfig
from .train import ClassifierRun, ClassifierTrainer, metric_columns

_LOGGER = logging.getLogger(__name__)


def env_penalty(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Squared gradient of the environment risk w.r.t. a dummy output scale fixed at 1."""
    scale = torch.ones((), device=logits.device, requires_grad=True)
    loss = F.cross_entropy(logits * scale, labels)
    (grad,) = autograd.grad(loss, [scale], create_graph=True)
    return grad.pow(2)


def irm_penalty(env_logits: Sequence[torch.Tensor], env_labels: Sequence[torch.Tensor]) -> torch.Tensor:
    """IRMv1 penalty summed over environments.

    Args:
        env_logits (Sequence[torch.Tensor]): Classifier logits per environment.
        env_labels (Sequence[torch.Tensor]): Class labels per environment.

    Raises:
        InvalidArgumentError: Fewer than two environments, or mismatched lists.
    """
    if len(env_logits) < 2:
        raise InvalidArgumentError("IRM needs at least two environments")
    if len(env_logits) != len(env_labels):
        raise InvalidArgumentError("one label tensor per environment is required")
    return torch.stack([env_penalty(z, y) for z, y in zip(env_logits, env_labels)]).sum()


@dataclass
class IrmSchedule:
    """Penalty weight ramping linearly from 0 to lambda_max over the first
    ramp_fraction of training, constant afterwards."""

    lambda_max: float = IRM_LAMBDA_MAX
    ramp_fraction: float = IRM_RAMP_FRACTION

    def weight(self, step: int, total_steps: int) -> float:
        if total_steps <= 0 or self.lambda_max == 0:
            return 0.0
        progress = step / (self.ramp_fraction * total_steps)
        return self.lambda_max * min(1.0, progress)


def train_irm(
    envs: Sequence[BiasedDataset],
    config: ClassifierConfig | None = None,
    schedule: IrmSchedule | None = None,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Single-head classifier minimizing mean environment risk plus the
    scheduled IRM penalty.

    Each step draws one batch of config.batch_size per environment. An epoch
    is one pass over the largest environment.

    Raises:
        InvalidArgumentError: Fewer than two environments.
    """
    if len(envs) < 2:
        raise InvalidArgumentError("IRM needs at least two environments")
    trainer = ClassifierTrainer(config, (HEAD_SHAPE,), events)
    cfg = trainer.config
    schedule = schedule or IrmSchedule(cfg.lambda_max, cfg.ramp_fraction)
    logger = get_logger("pycgn").getChild("Train_IRM")
    model, device = trainer.model, trainer.device

    streams = []
    for idx, env in enumerate(envs):
        images, labels, _ = env.tensors()
        streams.append(
            infinite_batches(images, labels, batch_size=cfg.batch_size, seed=cfg.seed, tag=f"irm-env{idx}")
        )
    steps_per_epoch = math.ceil(max(len(env) for env in envs) / cfg.batch_size)
    total = steps_per_epoch * cfg.epochs
    log = MetricsLog(
        metric_columns(model.head_roles) + ("penalty", "penalty_weight"),
        Path(out_dir) / "metrics.csv" if out_dir else None,
    )
    pooled_images = torch.cat([env.tensors()[0] for env in envs])
    pooled_labels = torch.cat([env.tensors()[1] for env in envs])

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        for _ in range(steps_per_epoch):
            step += 1
            batches = [next(stream) for stream in streams]
            x = torch.cat([b[0] for b in batches]).to(device)
            logits = model(x)[HEAD_SHAPE]
            env_logits = torch.split(logits, [len(b[1]) for b in batches])
            env_labels = [b[1].to(device) for b in batches]

            risk = torch.stack([F.cross_entropy(z, y) for z, y in zip(env_logits, env_labels)]).mean()
            penalty = irm_penalty(env_logits, env_labels)
            weight = schedule.weight(step, total)
            loss = risk + weight * penalty
            if weight > 1.0:
                loss = loss / weight
            if not torch.isfinite(loss):
                breakdown = {"risk": float(risk), "penalty": float(penalty)}
                raise NumericFailureError(f"non-finite IRM loss at step {step}", step, breakdown)

            trainer.optimizer.zero_grad()
            loss.backward()
            trainer.optimizer.step()

        metrics = trainer.epoch_metrics(epoch, None, None, test)
        metrics["train_acc"] = model.accuracy(pooled_images, pooled_labels)
        metrics.update(penalty=float(penalty), penalty_weight=weight)
        log.append(**metrics)
        logger.info("epoch %s penalty %.4g weight %.4g %s", epoch, float(penalty), weight, metrics.get("test_acc"))
        trainer.events.call(TrainingEvent.EPOCH_FINISHED, epoch=epoch, metrics=metrics)

    return ClassifierRun(model.eval(), log)
