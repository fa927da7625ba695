"""Classifier training settings and real/counterfactual batch mixing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from ..const import (
    CLF_BATCH_SIZE,
    CLF_EPOCHS,
    CLF_LR,
    HEAD_BG,
    HEAD_FG,
    HEAD_ROLES,
    HEAD_SHAPE,
    IRM_LAMBDA_MAX,
    IRM_RAMP_FRACTION,
)
from ..exceptions import InvalidArgumentError
from ..training.config import from_dict, read_yaml

# Column of the (shape, fg, bg) label triple that supervises each head.
TRIPLE_COLUMNS = {HEAD_SHAPE: 0, HEAD_FG: 1, HEAD_BG: 2}


@dataclass
class ClassifierConfig:
    """Optimizer and schedule settings shared by every classifier method."""

    epochs: int = CLF_EPOCHS
    lr: float = CLF_LR
    batch_size: int = CLF_BATCH_SIZE
    seed: int = 0
    device: str = "cpu"
    lambda_max: float = IRM_LAMBDA_MAX
    ramp_fraction: float = IRM_RAMP_FRACTION

    def validate(self) -> "ClassifierConfig":
        if self.epochs < 0:
            raise InvalidArgumentError("epochs must be >= 0")
        if self.batch_size < 2:
            raise InvalidArgumentError("batch_size must be >= 2")
        if self.lr <= 0:
            raise InvalidArgumentError("lr must be > 0")
        if self.lambda_max < 0:
            raise InvalidArgumentError("lambda_max must be >= 0")
        if not 0 < self.ramp_fraction <= 1:
            raise InvalidArgumentError("ramp_fraction must lie in (0, 1]")
        return self

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "ClassifierConfig":
        return from_dict(cls, data)

    @classmethod
    def from_file(cls, path: str | Path, **overrides: Any) -> "ClassifierConfig":
        data = read_yaml(path)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return from_dict(cls, data)


@dataclass
class MixBatchSpec:
    """How a batch splits into real and generated samples.

    head_labels maps a head role to the column of the generated label
    matrix that supervises it.
    """

    real_fraction: float = 0.5
    cf_ratio: int = 1
    head_labels: dict = field(default_factory=lambda: {HEAD_SHAPE: 0})

    def validate(self) -> "MixBatchSpec":
        if not 0.0 <= self.real_fraction <= 1.0:
            raise InvalidArgumentError("real_fraction must lie in [0, 1]")
        if self.cf_ratio < 1:
            raise InvalidArgumentError("cf_ratio must be >= 1")
        unknown = set(self.head_labels) - set(HEAD_ROLES)
        if unknown:
            raise InvalidArgumentError(f"unknown head roles {sorted(unknown)}")
        return self

    def split(self, batch_size: int) -> tuple[int, int]:
        """(real, generated) sample counts; they always sum to batch_size."""
        n_real = int(round(self.real_fraction * batch_size))
        return n_real, batch_size - n_real

    @classmethod
    def triple(cls, roles=HEAD_ROLES, real_fraction: float = 0.5, cf_ratio: int = 1) -> "MixBatchSpec":
        """Heads supervised by their own column of the label triple."""
        return cls(real_fraction, cf_ratio, {role: TRIPLE_COLUMNS[role] for role in roles})
