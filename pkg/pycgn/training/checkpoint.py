"""Checkpoints: one state file per network plus a checkpoint.json index."""

from __future__ import annotations

import logging
import os
import tempfile
from pathlib import Path
from typing import Union

import torch

from ..exceptions import CorruptCheckpointError, FetchRequiredError
from ..helpers import file_sha256
from ..scm import MechanismSet, MonolithicGenerator
from ..utils import Record

_LOGGER = logging.getLogger(__name__)

INDEX_NAME = "checkpoint.json"

CGN = "cgn"
CGAN = "cgan"

Generator = Union[MechanismSet, MonolithicGenerator]


def atomic_torch_save(obj, path: Path) -> None:
    """torch.save to a temp file, then rename over path."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        torch.save(obj, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(model: Generator, directory: str | Path, step: int = 0) -> Path:
    """Write every network of model into directory and index it.

    Args:
        model (MechanismSet | MonolithicGenerator): Model to persist.
        directory (str | Path): Target directory, created if needed.
        step (int): Training step the parameters belong to.

    Returns:
        Path: The checkpoint.json index.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    files = {}
    for name, net in model.mechanisms().items():
        path = directory / f"{name}.pt"
        atomic_torch_save(net.state_dict(), path)
        files[name] = {"file": path.name, "sha256": file_sha256(path)}

    index = Record(
        {
            "kind": CGN if isinstance(model, MechanismSet) else CGAN,
            "architecture": model.architecture(),
            "architecture_hash": model.architecture_hash(),
            "noise_dim": model.noise_dim,
            "n_classes": model.n_classes,
            "step": int(step),
            "files": files,
        }
    )
    _LOGGER.debug("Checkpoint at step %s written to %s", step, directory)
    return index.save(directory / INDEX_NAME)


def read_index(directory: str | Path) -> Record:
    """Return the checkpoint.json of a checkpoint directory.

    Raises:
        FetchRequiredError: No index exists.
    """
    path = Path(directory) / INDEX_NAME
    if not path.exists():
        raise FetchRequiredError(f"No checkpoint found in {directory}")
    return Record.load(path)


def load_checkpoint(directory: str | Path, expected_hash: str | None = None) -> Generator:
    """Rebuild the model stored in directory, in eval mode.

    Args:
        directory (str | Path): Directory written by save_checkpoint.
        expected_hash (str, optional): Architecture hash the caller requires.

    Raises:
        FetchRequiredError: No checkpoint exists.
        CorruptCheckpointError: A file or the architecture does not match the index.
    """
    directory = Path(directory)
    index = read_index(directory)

    if index["kind"] == CGN:
        model: Generator = MechanismSet(**index["architecture"])
    elif index["kind"] == CGAN:
        model = MonolithicGenerator(**index["architecture"])
    else:
        raise CorruptCheckpointError(f"Unknown checkpoint kind {index['kind']!r}")

    recorded = index["architecture_hash"]
    if model.architecture_hash() != recorded:
        raise CorruptCheckpointError(
            f"Architecture hash {recorded} does not match the model it describes"
        )
    if expected_hash is not None and expected_hash != recorded:
        raise CorruptCheckpointError(f"Expected architecture {expected_hash}, found {recorded}")

    nets = model.mechanisms()
    if set(nets) != set(index["files"]):
        raise CorruptCheckpointError(f"{directory} lists {sorted(index['files'])}, expected {sorted(nets)}")

    for name, net in nets.items():
        info = index["files"][name]
        path = directory / info["file"]
        if not path.exists() or file_sha256(path) != info["sha256"]:
            raise CorruptCheckpointError(f"{path} is missing or does not match its checksum")
        net.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))

    return model.eval()
