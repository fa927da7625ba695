"""Dataset persistence: one npz container per split plus a JSON manifest."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..const import MANIFEST_NAME
from ..exceptions import FetchRequiredError, InvalidDatasetError
from ..helpers import array_checksum, file_sha256
from ..utils import Record
from .forge import BiasedDataset

_LOGGER = logging.getLogger(__name__)


class DatasetManifest(Record):
    """Sidecar manifest describing the splits stored in a directory."""

    @property
    def splits(self) -> dict:
        """Split name to file/checksum info."""
        return self.setdefault("splits", {})


def _split_name(dataset: BiasedDataset) -> str:
    env = dataset.meta.get("environment")
    return dataset.split if env is None else f"env{env}"


def save_datasets(datasets: list[BiasedDataset], out_dir: str | Path) -> DatasetManifest:
    """Write datasets as <name>.npz and record them in manifest.json.

    Train/test splits are named after the split, environments "env<i>".
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_NAME
    manifest = DatasetManifest.load(manifest_path) if manifest_path.exists() else DatasetManifest()

    for dataset in datasets:
        name = _split_name(dataset)
        path = out_dir / f"{name}.npz"
        np.savez(
            path,
            images=dataset.images.astype(np.float32),
            class_labels=dataset.class_labels.astype(np.int64),
            factor_labels=dataset.factor_labels.astype(np.int64),
        )
        manifest.splits[name] = {
            "file": path.name,
            "sha256": file_sha256(path),
            "n": len(dataset),
            "split": dataset.split,
            "variant": dataset.variant,
            "correlation": dataset.correlation,
            "images_checksum": array_checksum(dataset.images),
            "meta": dataset.meta,
        }
        _LOGGER.info("Wrote %s (%s samples)", path, len(dataset))

    manifest.save(manifest_path)
    return manifest


def load_dataset(directory: str | Path, name: str) -> BiasedDataset:
    """Load split `name` ("train", "test" or "env<i>") from a dataset directory.

    Raises:
        FetchRequiredError: The directory or split does not exist.
        InvalidDatasetError: The file does not match its manifest checksum.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FetchRequiredError(f"No dataset manifest in {directory}; run 'pycgn dataset build'")

    manifest = DatasetManifest.load(manifest_path)
    if name not in manifest.splits:
        raise FetchRequiredError(f"Split '{name}' not found in {directory}")

    info = manifest.splits[name]
    path = directory / info["file"]
    if file_sha256(path) != info["sha256"]:
        raise InvalidDatasetError(f"{path} does not match its manifest checksum")

    with np.load(path) as data:
        return BiasedDataset(
            data["images"],
            data["class_labels"],
            data["factor_labels"],
            info["correlation"],
            info["split"],
            info["variant"],
            info["meta"],
        )


def list_environments(directory: str | Path) -> list[str]:
    """Names of the environment splits stored in a directory, in order."""
    manifest = DatasetManifest.load(Path(directory) / MANIFEST_NAME)
    return sorted((n for n in manifest.splits if n.startswith("env")), key=lambda n: int(n[3:]))
