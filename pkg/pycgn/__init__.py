"""pycgn definition."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, Callable

from .classifiers import ClassifierConfig, train_baseline, train_cf_augmented, train_ensemble
from .const import DEFAULT_CF_RATIO, DEFAULT_SIGMA, DOUBLE_COLORED, WILDLIFE
from .datasets import BiasedDataset, build_variant, ingest_textures, load_mnist, synthetic_digits
from .evaluation import evaluate
from .events import EventHandler, TrainingEvent
from .exceptions import InvalidArgumentError, InvalidDatasetError
from .helpers import attach_run_log, get_logger
from .scm import CounterfactualSet, MechanismSet, sample_counterfactual_set
from .training import TrainConfig, train_cgn

if sys.version_info < (3, 9, 0):
    sys.exit("The pycgn module requires Python 3.9.0 or later")

__version__ = "1.0.0"

_LOGGER = logging.getLogger(__name__)

CLASSIFY_METHODS = ("baseline", "cgn", "ensemble")


class CounterfactualLab(dict):
    """
    Counterfactual generative network workbench.

    Holds one biased dataset, the mechanisms trained on it and the
    counterfactuals sampled from them, so the whole pipeline can be driven
    from a few calls.

    .. testcode::
    from pycgn import CounterfactualLab

    with CounterfactualLab("./runs/demo", synthetic=2000) as lab:
        lab.dataset()
        lab.train_cgn(steps=200)
        lab.sample(n_noise=100)
        print(lab.classify("cgn"))

    Args:
        root (str | Path): Directory receiving every run of the lab.
        variant (str, optional): Dataset variant. Defaults to double_colored.
        seed (int, optional): Seed shared by every stage. Defaults to 0.
        synthetic (int, optional): Use this many synthetic digits instead of MNIST. Defaults to 0 (MNIST).
        data_root (str | Path, optional): Where MNIST lives. Defaults to ./data.
    """

    def __init__(
        self,
        root: str | Path,
        variant: str = DOUBLE_COLORED,
        seed: int = 0,
        synthetic: int = 0,
        data_root: str | Path = "./data",
    ) -> None:
        _LOGGER.debug("Initializing lab ...")
        super().__init__()
        self.root = Path(root)
        self.variant = variant
        self.seed = seed
        self.synthetic = synthetic
        self.data_root = Path(data_root)

        self._log = get_logger("pycgn")
        self._events = EventHandler()
        self._handler: logging.Handler | None = None

        self.mechanisms: MechanismSet | None = None
        self.cf_set: CounterfactualSet | None = None

    def __enter__(self) -> Any:
        """Mirror the log into <root>/run.log."""
        self._handler = attach_run_log(self._log, self.root)
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> Any:
        """Detach the run log."""
        if self._handler is not None:
            self._log.removeHandler(self._handler)
            self._handler.close()
            self._handler = None

    def set_callback(self, event: TrainingEvent, func: Callable) -> None:
        """Set callback which is called when the trainers emit event."""
        self._events.set_handler(event, func)

    def dataset(self, sigma: float = DEFAULT_SIGMA) -> tuple[BiasedDataset, BiasedDataset]:
        """Build the train and test split of the lab's variant."""
        if self.synthetic:
            train_digits = synthetic_digits(self.synthetic, self.seed)
            test_digits = synthetic_digits(max(1, self.synthetic // 5), self.seed + 1)
        else:
            train_digits = load_mnist(self.data_root / "mnist", True)
            test_digits = load_mnist(self.data_root / "mnist", False)
        bank = ingest_textures(seed=self.seed) if self.variant == WILDLIFE else None
        self["train"], self["test"] = build_variant(self.variant, self.seed, train_digits, test_digits, sigma, bank)
        self._log.info("Built %s: %s train / %s test", self.variant, len(self["train"]), len(self["test"]))
        return self["train"], self["test"]

    def _require(self, key: str) -> BiasedDataset:
        if key not in self:
            raise InvalidDatasetError("call dataset() first")
        return self[key]

    def train_cgn(self, **overrides: Any) -> MechanismSet:
        """Train the mechanisms; keyword arguments override TrainConfig fields."""
        config = TrainConfig.from_dict({"variant": self.variant, "seed": self.seed, **overrides}).validate()
        run = train_cgn(config, self._require("train"), self.root / "cgn", events=self._events)
        self.mechanisms = run.mechanisms
        return self.mechanisms

    def sample(self, n_noise: int, cf_ratio: int = DEFAULT_CF_RATIO) -> CounterfactualSet:
        """Sample counterfactuals from the trained mechanisms."""
        if self.mechanisms is None:
            raise InvalidArgumentError("call train_cgn() first")
        self.cf_set = sample_counterfactual_set(self.mechanisms, n_noise, cf_ratio, self.seed, self.variant)
        return self.cf_set

    def classify(self, method: str = "cgn", epochs: int | None = None) -> dict[str, float]:
        """Train a classifier and return its train and test accuracy."""
        if method not in CLASSIFY_METHODS:
            raise InvalidArgumentError(f"method must be one of {CLASSIFY_METHODS}")
        config = ClassifierConfig(seed=self.seed)
        if epochs is not None:
            config.epochs = epochs
        train, test = self._require("train"), self._require("test")
        out_dir = self.root / f"clf_{method}"

        if method == "baseline":
            model = train_baseline(train, config, test, out_dir, self._events).model
        else:
            if self.cf_set is None:
                raise InvalidArgumentError("call sample() first")
            trainer = train_ensemble if method == "ensemble" else train_cf_augmented
            model = trainer(train, self.cf_set, config=config, test=test, out_dir=out_dir, events=self._events).model

        result = {"train_acc": evaluate(model, train), "test_acc": evaluate(model, test)}
        self._log.info("%s: %s", method, result)
        return result


__all__ = [CounterfactualLab, TrainingEvent]
