"""Trainer configuration, read from YAML files."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from ..const import (
    ADAM_BETAS,
    ADVERSARIAL,
    BATCH_SIZE,
    CGN_STEPS,
    CHECKPOINT_EVERY,
    COLLAPSE_PATIENCE,
    COLLAPSE_WINDOW,
    DOUBLE_COLORED,
    LOG_EVERY,
    LR_DISCRIMINATOR,
    LR_SHAPE,
    LR_TEXTURE,
    MODES,
    NOISE_DIM,
    VARIANTS,
)
from ..exceptions import ConfigError, InvalidArgumentError
from ..losses import LossWeights


def from_dict(cls, data: dict[str, Any] | None):
    """Build a config dataclass from a mapping, rejecting unknown keys.

    Nested dataclass fields are built recursively.

    Raises:
        ConfigError: A key is not a field of cls.
    """
    data = dict(data or {})
    known = {item.name: item for item in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown {cls.__name__} key(s): {', '.join(unknown)}")

    kwargs = {}
    for name, value in data.items():
        factory = known[name].default_factory
        if is_dataclass(factory) and isinstance(value, dict):
            value = from_dict(factory, value)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


def read_yaml(path: str | Path) -> dict[str, Any]:
    """Load a YAML mapping; an empty file gives {}.

    Raises:
        ConfigError: The file is not a mapping.
    """
    with open(path, encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    return data


@dataclass
class OptimizerConfig:
    """Adam settings per trained component."""

    lr_shape: float = LR_SHAPE
    lr_texture: float = LR_TEXTURE
    lr_discriminator: float = LR_DISCRIMINATOR
    betas: tuple = ADAM_BETAS

    def validate(self) -> "OptimizerConfig":
        for name in ("lr_shape", "lr_texture", "lr_discriminator"):
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f"{name} must be > 0")
        if len(self.betas) != 2:
            raise InvalidArgumentError("betas must have two entries")
        return self


@dataclass
class TrainConfig:
    """Settings of one CGN or cGAN training run."""

    variant: str = DOUBLE_COLORED
    mode: str = ADVERSARIAL
    steps: int = CGN_STEPS
    batch_size: int = BATCH_SIZE
    seed: int = 0
    noise_dim: int = NOISE_DIM
    shared_noise: bool = True
    checkpoint_every: int = CHECKPOINT_EVERY
    log_every: int = LOG_EVERY
    collapse_window: int = COLLAPSE_WINDOW
    collapse_patience: int = COLLAPSE_PATIENCE
    device: str = "cpu"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    weights: LossWeights = field(default_factory=LossWeights)

    def validate(self) -> "TrainConfig":
        """Check every field and return self.

        Raises:
            InvalidArgumentError: A value is out of range.
        """
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(f"variant must be one of {VARIANTS}")
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        if self.steps < 0:
            raise InvalidArgumentError("steps must be >= 0")
        for name in ("batch_size", "noise_dim", "checkpoint_every", "log_every"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        self.optimizer.validate()
        self.weights.validate()
        return self

    def to_dict(self) -> dict[str, Any]:
        """Plain-data snapshot for manifests."""
        data = asdict(self)
        data["optimizer"]["betas"] = list(self.optimizer.betas)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "TrainConfig":
        return from_dict(cls, data)

    @classmethod
    def from_file(cls, path: str | Path, **overrides: Any) -> "TrainConfig":
        """Read a YAML file; non-None overrides win over file values."""
        data = read_yaml(path)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return from_dict(cls, data)
