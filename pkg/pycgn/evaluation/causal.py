"""Identify the causal signal as the one whose accuracy is stable across environments."""

from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

from ..classifiers import ClassifierConfig, ClassifierModel, train_factor_classifier
from ..const import COLORED, HEAD_BG, HEAD_FG, HEAD_SHAPE
from ..datasets import BiasedDataset
from ..exceptions import InvalidArgumentError
from ..scm import CounterfactualSet, MechanismSet, sample_counterfactual_set
from .metrics import evaluate

_LOGGER = logging.getLogger(__name__)

# Signal name -> head role of the single-factor classifier.
SIGNALS = {"SC": HEAD_SHAPE, "OCC": HEAD_FG, "BCC": HEAD_BG}

TIE_TOLERANCE = 1e-9


class CausalIdResult(NamedTuple):
    """Per-environment accuracies and the stability verdict."""

    table: dict[str, list[float]]
    rhos: list[float]
    ranges: dict[str, float]
    ranking: list[str]
    stable: list[str]

    @property
    def causal(self) -> str | None:
        """The identified signal, or None when several tie."""
        return self.stable[0] if len(self.stable) == 1 else None


def accuracy_range(values: Sequence[float]) -> float:
    return max(values) - min(values)


def identify_stable_signal(
    table: dict[str, Sequence[float]], rhos: Sequence[float], tolerance: float = TIE_TOLERANCE
) -> CausalIdResult:
    """Rank signals by accuracy range (max - min) across environments.

    Every signal within tolerance of the smallest range is reported as
    stable, so ties are never broken arbitrarily.
    """
    ranges = {name: accuracy_range(accs) for name, accs in table.items()}
    ranking = sorted(ranges, key=lambda name: (ranges[name], name))
    best = ranges[ranking[0]]
    stable = [name for name in ranking if ranges[name] - best <= tolerance]
    return CausalIdResult({k: list(v) for k, v in table.items()}, list(rhos), ranges, ranking, stable)


def signal_accuracies(
    classifiers: dict[str, ClassifierModel], envs: Sequence[BiasedDataset]
) -> dict[str, list[float]]:
    """Class-label accuracy of each signal classifier on each environment."""
    return {name: [evaluate(model, env) for env in envs] for name, model in classifiers.items()}


def causal_identification(
    mechs: MechanismSet,
    envs: Sequence[BiasedDataset],
    n_noise: int,
    cf_ratio: int = 1,
    config: ClassifierConfig | None = None,
) -> CausalIdResult:
    """Train one single-factor classifier per signal on counterfactuals of
    mechs and compare their accuracy ranges over the environments.

    Colored MNIST has no background signal, so only SC and OCC are trained.

    Raises:
        InvalidArgumentError: Fewer than two environments.
    """
    if len(envs) < 2:
        raise InvalidArgumentError("causal identification needs at least two environments")
    config = config or ClassifierConfig()
    variant = envs[0].variant
    cf_set: CounterfactualSet = sample_counterfactual_set(mechs, n_noise, cf_ratio, config.seed, variant)

    signals = {k: v for k, v in SIGNALS.items() if not (variant == COLORED and v == HEAD_BG)}
    classifiers = {}
    for name, role in signals.items():
        _LOGGER.info("Training %s classifier on %s counterfactuals", name, len(cf_set))
        classifiers[name] = train_factor_classifier(cf_set, role, config).model

    table = signal_accuracies(classifiers, envs)
    result = identify_stable_signal(table, [env.correlation for env in envs])
    _LOGGER.info("Accuracy ranges %s, stable: %s", result.ranges, result.stable)
    return result
