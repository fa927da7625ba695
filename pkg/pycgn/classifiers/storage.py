"""Classifier checkpoints: model.pt plus classifier.json."""

from __future__ import annotations

from pathlib import Path

import torch

from ..exceptions import CorruptCheckpointError, FetchRequiredError
from ..helpers import file_sha256
from ..training.checkpoint import atomic_torch_save
from ..utils import Record
from .models import ClassifierModel

INDEX_NAME = "classifier.json"
WEIGHTS_NAME = "model.pt"


def save_classifier(model: ClassifierModel, directory: str | Path, method: str = "") -> Path:
    """Write weights and index; return the index path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    weights = directory / WEIGHTS_NAME
    atomic_torch_save(model.state_dict(), weights)
    return Record(
        {
            "method": method,
            "head_roles": list(model.head_roles),
            "architecture_id": model.architecture_id,
            "sha256": file_sha256(weights),
        }
    ).save(directory / INDEX_NAME)


def load_classifier(directory: str | Path) -> ClassifierModel:
    """Rebuild a classifier in eval mode.

    Raises:
        FetchRequiredError: Nothing was saved in directory.
        CorruptCheckpointError: The weights or architecture do not match the index.
    """
    directory = Path(directory)
    if not (directory / INDEX_NAME).exists():
        raise FetchRequiredError(f"No classifier found in {directory}")
    index = Record.load(directory / INDEX_NAME)
    weights = directory / WEIGHTS_NAME
    if not weights.exists() or file_sha256(weights) != index["sha256"]:
        raise CorruptCheckpointError(f"{weights} is missing or does not match its checksum")

    model = ClassifierModel(index["head_roles"])
    if model.architecture_id != index["architecture_id"]:
        raise CorruptCheckpointError(f"Unknown classifier architecture {index['architecture_id']}")
    model.load_state_dict(torch.load(weights, map_location="cpu", weights_only=True))
    return model.eval()
