"""Counterfactual count and ratio sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import spearmanr

from ..classifiers import ClassifierConfig, train_cf_augmented
from ..const import MAX_CF_RATIO, TRIPLE_SPACE
from ..datasets import BiasedDataset
from ..exceptions import InvalidArgumentError
from ..scm import MechanismSet, sample_counterfactual_set
from .metrics import evaluate

_LOGGER = logging.getLogger(__name__)

MIN_INFORMATIVE_COUNT = 10_000


class AblationResult(NamedTuple):
    """Grid results and per-ratio median curves."""

    variant: str
    rows: list[dict]
    curves: dict[int, dict[int, float]]
    spearman: dict[int, float]


def monotonicity(curve: dict[int, float]) -> float:
    """Spearman correlation between log(count) and accuracy.

    nan below 2 points or when the accuracies are all equal.
    """
    counts = sorted(curve)
    accs = [curve[c] for c in counts]
    if len(counts) < 2 or len(set(accs)) < 2:
        return float("nan")
    rho, _ = spearmanr(np.log(counts), accs)
    return float(rho)


def median_curves(rows: Sequence[dict]) -> dict[int, dict[int, float]]:
    """Median test accuracy over seeds for every (ratio, count) cell."""
    cells: dict[tuple[int, int], list[float]] = {}
    for row in rows:
        cells.setdefault((row["cf_ratio"], row["count"]), []).append(row["test_acc"])
    curves: dict[int, dict[int, float]] = {}
    for (ratio, count), accs in sorted(cells.items()):
        curves.setdefault(ratio, {})[count] = float(np.median(accs))
    return curves


def ablate_cf_count(
    mechs: MechanismSet,
    train: BiasedDataset,
    test: BiasedDataset,
    counts: Sequence[int],
    cf_ratios: Sequence[int],
    seeds: Sequence[int],
    config: ClassifierConfig | None = None,
) -> AblationResult:
    """Train a CF-augmented classifier for every (count, ratio, seed).

    A cell uses ceil(count / ratio) noise draws with ratio label triples each.

    Raises:
        InvalidArgumentError: A ratio exceeds the variant maximum, or a grid axis is empty.
    """
    variant = train.variant
    limit = MAX_CF_RATIO.get(variant, TRIPLE_SPACE)
    if not counts or not cf_ratios or not seeds:
        raise InvalidArgumentError("counts, cf_ratios and seeds must be non-empty")
    for ratio in cf_ratios:
        if not 1 <= ratio <= limit:
            raise InvalidArgumentError(f"cf_ratio must lie in [1, {limit}] for {variant}, got {ratio}")
    if min(counts) < MIN_INFORMATIVE_COUNT:
        _LOGGER.warning(
            "Counts below %s counterfactuals barely move accuracy above the biased baseline",
            MIN_INFORMATIVE_COUNT,
        )

    base = config or ClassifierConfig()
    rows = []
    for ratio in cf_ratios:
        for count in counts:
            for seed in seeds:
                cfg = replace(base, seed=seed)
                n_noise = max(1, math.ceil(count / ratio))
                cf_set = sample_counterfactual_set(mechs, n_noise, ratio, seed, variant)
                model = train_cf_augmented(train, cf_set, config=cfg).model
                acc = evaluate(model, test)
                rows.append({"count": count, "cf_ratio": ratio, "seed": seed, "test_acc": acc})
                _LOGGER.info("count %s ratio %s seed %s -> %.4f", count, ratio, seed, acc)

    curves = median_curves(rows)
    return AblationResult(variant, rows, curves, {ratio: monotonicity(c) for ratio, c in curves.items()})
