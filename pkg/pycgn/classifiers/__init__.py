"""Baseline, counterfactual, ensemble and IRM classifiers."""

from __future__ import annotations

from .config import TRIPLE_COLUMNS, ClassifierConfig, MixBatchSpec
from .irm import IrmSchedule, env_penalty, irm_penalty, train_irm
from .models import ENSEMBLE, Backbone, ClassifierModel, ensemble_log_probs
from .storage import load_classifier, save_classifier
from .train import (
    ClassifierRun,
    ClassifierTrainer,
    LabeledImages,
    head_losses,
    train_baseline,
    train_cf_augmented,
    train_ensemble,
    train_factor_classifier,
    train_gan_augmented,
    train_iv_augmented,
)

__all__ = [
    Backbone,
    ClassifierConfig,
    ClassifierModel,
    ClassifierRun,
    ClassifierTrainer,
    ENSEMBLE,
    IrmSchedule,
    LabeledImages,
    MixBatchSpec,
    TRIPLE_COLUMNS,
    ensemble_log_probs,
    env_penalty,
    head_losses,
    irm_penalty,
    load_classifier,
    save_classifier,
    train_baseline,
    train_cf_augmented,
    train_ensemble,
    train_factor_classifier,
    train_gan_augmented,
    train_iv_augmented,
    train_irm,
]
