"""Classifier training on real data mixed with generated data."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import NamedTuple, Sequence

import torch
import torch.nn.functional as F

from ..const import HEAD_ROLES, HEAD_SHAPE
from ..datasets import BiasedDataset
from ..events import EventHandler, TrainingEvent
from ..exceptions import InvalidArgumentError, InvalidDatasetError, NumericFailureError
from ..helpers import get_logger, seed_everything
from ..scm import CounterfactualSet, MechanismSet, MonolithicGenerator, sample_counterfactual_set
from ..training.batches import infinite_batches
from ..training.cgan import sample_cgan
from ..utils import MetricsLog
from .config import TRIPLE_COLUMNS, ClassifierConfig, MixBatchSpec
from .models import ClassifierModel

_LOGGER = logging.getLogger(__name__)

BASE_COLUMNS = ("epoch", "train_acc", "test_acc")


class LabeledImages(NamedTuple):
    """Generated images with a label matrix, one column per factor."""

    images: torch.Tensor
    labels: torch.Tensor

    def __len__(self) -> int:
        return len(self.labels)


class ClassifierRun(NamedTuple):
    """A trained classifier and its per-epoch metrics."""

    model: ClassifierModel
    metrics: MetricsLog


def metric_columns(head_roles: Sequence[str]) -> tuple[str, ...]:
    """CSV header: epoch, accuracies, then one test accuracy per head of an ensemble."""
    if len(head_roles) < 2:
        return BASE_COLUMNS
    return BASE_COLUMNS + tuple(f"acc_{role}" for role in head_roles)


def head_losses(
    logits: dict[str, torch.Tensor], labels: torch.Tensor, head_labels: dict[str, int]
) -> dict[str, torch.Tensor]:
    """Cross-entropy of each head against its own label column only."""
    return {role: F.cross_entropy(logits[role], labels[:, col]) for role, col in head_labels.items()}


class ClassifierTrainer:
    """Fits a ClassifierModel on mixed real/generated batches."""

    def __init__(
        self,
        config: ClassifierConfig | None = None,
        head_roles: Sequence[str] = (HEAD_SHAPE,),
        events: EventHandler | None = None,
    ) -> None:
        self.config = (config or ClassifierConfig()).validate()
        self.events = events or EventHandler()
        self._log = get_logger("pycgn")

        seed_everything(self.config.seed)
        self.device = torch.device(self.config.device)
        self.model = ClassifierModel(head_roles).to(self.device)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=self.config.lr)

    def epoch_metrics(
        self, epoch: int, real: BiasedDataset | None, aux: LabeledImages | None, test: BiasedDataset | None
    ) -> dict[str, float]:
        model = self.model
        metrics: dict[str, float] = {"epoch": epoch}
        if real is not None and len(real):
            images, labels, _ = real.tensors()
            metrics["train_acc"] = model.accuracy(images, labels)
        elif aux is not None and len(aux):
            role = model.head_roles[0]
            metrics["train_acc"] = model.accuracy(aux.images, aux.labels[:, TRIPLE_COLUMNS[role]], role)
        if test is not None:
            images, labels, _ = test.tensors()
            metrics["test_acc"] = model.accuracy(images, labels)
            if len(model.head_roles) > 1:
                for role in model.head_roles:
                    metrics[f"acc_{role}"] = model.accuracy(images, labels, role)
        return metrics

    def fit(
        self,
        real: BiasedDataset | None,
        aux: LabeledImages | None = None,
        spec: MixBatchSpec | None = None,
        test: BiasedDataset | None = None,
        out_dir: str | Path | None = None,
    ) -> ClassifierRun:
        """Train for config.epochs epochs.

        An epoch is one pass over the real data, or over the generated data
        when no real samples enter the batches.

        Raises:
            InvalidDatasetError: Neither real nor generated samples are available.
            InvalidArgumentError: spec supervises a head the model lacks.
            NumericFailureError: The loss turned non-finite.
        """
        logger = self._log.getChild("Train_Classifier")
        cfg = self.config
        spec = (spec or MixBatchSpec(real_fraction=1.0)).validate()
        model = self.model
        if not set(spec.head_labels) <= set(model.head_roles):
            raise InvalidArgumentError(f"spec supervises {sorted(spec.head_labels)}, model has {model.head_roles}")

        has_real = real is not None and len(real) > 0
        has_aux = aux is not None and len(aux) > 0
        n_real, n_aux = spec.split(cfg.batch_size)
        if not has_aux:
            n_real, n_aux = cfg.batch_size, 0
        if not has_real:
            n_real, n_aux = 0, cfg.batch_size
        if not (has_real or has_aux):
            raise InvalidDatasetError("no training samples")
        if n_aux and aux.labels.dim() != 2:
            raise InvalidDatasetError("generated samples need a label matrix")

        log = MetricsLog(metric_columns(model.head_roles), Path(out_dir) / "metrics.csv" if out_dir else None)
        if n_real:
            images, labels, _ = real.tensors()
            real_stream = infinite_batches(images, labels, batch_size=n_real, seed=cfg.seed, tag="clf-real")
            steps = math.ceil(len(real) / n_real)
        if n_aux:
            aux_stream = infinite_batches(aux.images, aux.labels, batch_size=n_aux, seed=cfg.seed, tag="clf-aux")
            if not n_real:
                steps = math.ceil(len(aux) / n_aux)

        for epoch in range(1, cfg.epochs + 1):
            model.train()
            for _ in range(steps):
                parts, real_y, aux_y = [], None, None
                if n_real:
                    x, real_y = next(real_stream)
                    parts.append(x)
                if n_aux:
                    x, aux_y = next(aux_stream)
                    parts.append(x)
                logits = model(torch.cat(parts).to(self.device))
                k = 0 if real_y is None else len(real_y)

                loss = torch.zeros((), device=self.device)
                if real_y is not None:
                    real_logits = {role: v[:k] for role, v in logits.items()}
                    real_loss = F.nll_loss(model.combine(real_logits), real_y.to(self.device))
                    loss = loss + real_loss * k / (k + (0 if aux_y is None else len(aux_y)))
                if aux_y is not None:
                    aux_logits = {role: v[k:] for role, v in logits.items()}
                    aux_loss = sum(head_losses(aux_logits, aux_y.to(self.device), spec.head_labels).values())
                    loss = loss + aux_loss * len(aux_y) / (k + len(aux_y))

                if not torch.isfinite(loss):
                    raise NumericFailureError(f"non-finite classifier loss in epoch {epoch}", epoch, {"loss": float(loss)})
                self.optimizer.zero_grad()
                loss.backward()
                self.optimizer.step()

            metrics = self.epoch_metrics(epoch, real if has_real else None, aux if has_aux else None, test)
            log.append(**metrics)
            logger.info("epoch %s %s", epoch, {name: round(v, 4) for name, v in metrics.items() if name != "epoch"})
            self.events.call(TrainingEvent.EPOCH_FINISHED, epoch=epoch, metrics=metrics)

        return ClassifierRun(model.eval(), log)


def _cf_labels(cf_set: CounterfactualSet) -> LabeledImages:
    if cf_set.labels.dim() != 2 or cf_set.labels.shape[1] != 3:
        raise InvalidDatasetError("counterfactual set lacks (shape, fg, bg) factor labels")
    return LabeledImages(cf_set.images, cf_set.labels)


def train_baseline(
    dataset: BiasedDataset,
    config: ClassifierConfig | None = None,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Single-head classifier trained on the class labels of real data only."""
    return ClassifierTrainer(config, (HEAD_SHAPE,), events).fit(dataset, test=test, out_dir=out_dir)


def train_cf_augmented(
    dataset: BiasedDataset,
    cf_set: CounterfactualSet,
    target_factor: str = HEAD_SHAPE,
    config: ClassifierConfig | None = None,
    real_fraction: float = 0.5,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Single head supervised by the class label on real samples and by the
    target factor's mechanism label on counterfactual samples.

    Raises:
        InvalidDatasetError: cf_set lacks factor labels.
    """
    if target_factor not in HEAD_ROLES:
        raise InvalidArgumentError(f"target_factor must be one of {HEAD_ROLES}")
    aux = _cf_labels(cf_set)
    spec = MixBatchSpec.triple((target_factor,), real_fraction)
    return ClassifierTrainer(config, (target_factor,), events).fit(dataset, aux, spec, test, out_dir)


def train_ensemble(
    dataset: BiasedDataset,
    cf_set: CounterfactualSet,
    config: ClassifierConfig | None = None,
    real_fraction: float = 0.5,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Shape, fg and bg heads on a shared backbone.

    Each head learns its own label on counterfactual samples; on real
    samples the averaged head prediction learns the class label.
    """
    aux = _cf_labels(cf_set)
    spec = MixBatchSpec.triple(HEAD_ROLES, real_fraction)
    return ClassifierTrainer(config, HEAD_ROLES, events).fit(dataset, aux, spec, test, out_dir)


def train_gan_augmented(
    dataset: BiasedDataset,
    generator: MonolithicGenerator | None,
    n_samples: int,
    config: ClassifierConfig | None = None,
    real_fraction: float = 0.5,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Real data plus cGAN samples labeled with their conditioning class."""
    config = (config or ClassifierConfig()).validate()
    aux = None
    if generator is not None and n_samples > 0:
        images, labels = sample_cgan(generator, n_samples, config.seed)
        aux = LabeledImages(images, labels.unsqueeze(1))
    spec = MixBatchSpec(real_fraction, 1, {HEAD_SHAPE: 0})
    return ClassifierTrainer(config, (HEAD_SHAPE,), events).fit(dataset, aux, spec, test, out_dir)


def train_iv_augmented(
    dataset: BiasedDataset,
    mechs: MechanismSet,
    n_images: int,
    config: ClassifierConfig | None = None,
    real_fraction: float = 0.5,
    test: BiasedDataset | None = None,
    out_dir: str | Path | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Like train_cf_augmented, but every generated image has its own noise
    draw and one random label triple (interventional images)."""
    config = (config or ClassifierConfig()).validate()
    iv_set = sample_counterfactual_set(mechs, n_images, 1, config.seed, dataset.variant)
    return train_cf_augmented(dataset, iv_set, HEAD_SHAPE, config, real_fraction, test, out_dir, events)


def train_factor_classifier(
    cf_set: CounterfactualSet,
    role: str,
    config: ClassifierConfig | None = None,
    events: EventHandler | None = None,
) -> ClassifierRun:
    """Single-head classifier trained on counterfactuals only, predicting one factor."""
    aux = _cf_labels(cf_set)
    spec = MixBatchSpec(0.0, 1, {role: TRIPLE_COLUMNS[role]})
    return ClassifierTrainer(config, (role,), events).fit(None, aux, spec)
