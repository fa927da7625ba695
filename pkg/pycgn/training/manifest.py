"""Run manifests: everything needed to trace or re-execute a run."""

from __future__ import annotations

import subprocess
from pathlib import Path
from typing import Any

from ..const import MANIFEST_NAME
from ..exceptions import CorruptCheckpointError
from ..helpers import config_hash, file_sha256
from ..utils import Record

PACKAGE_VERSION = "1.0.0"


def source_revision() -> str:
    """Git revision of the source tree, or the package version outside git."""
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return f"pycgn-{PACKAGE_VERSION}"


class RunManifest(Record):
    """manifest.json of a run directory."""

    path: Path | None = None

    @classmethod
    def start(cls, run_dir: str | Path, command: str, config: dict[str, Any]) -> "RunManifest":
        """Create and immediately persist the manifest of a new run."""
        manifest = cls(
            {
                "command": command,
                "config": config,
                "config_hash": config_hash(config),
                "source_revision": source_revision(),
                "status": "running",
                "checkpoints": {},
                "artifacts": {},
                "metrics": {},
            }
        )
        manifest.path = Path(run_dir) / MANIFEST_NAME
        manifest.save(manifest.path)
        return manifest

    def write(self) -> None:
        """Persist to the run directory it was started in."""
        if self.path is not None:
            self.save(self.path)

    def add_checkpoint(self, name: str, index_path: str | Path) -> None:
        """Reference a checkpoint.json by its sha256."""
        index_path = Path(index_path)
        self["checkpoints"][name] = {"path": str(index_path), "sha256": file_sha256(index_path)}

    def add_artifact(self, name: str, path: str | Path) -> None:
        """Reference any other output file."""
        self["artifacts"][name] = str(path)

    def finish(self, status: str = "ok", **fields: Any) -> None:
        """Record the outcome and persist."""
        self["status"] = status
        self.update(fields)
        self.write()

    def verify(self) -> None:
        """Check that every referenced checkpoint exists with its recorded hash.

        Raises:
            CorruptCheckpointError: A reference is dangling or stale.
        """
        for name, ref in self.get("checkpoints", {}).items():
            path = Path(ref["path"])
            if not path.exists() or file_sha256(path) != ref["sha256"]:
                raise CorruptCheckpointError(f"Checkpoint '{name}' at {path} is missing or modified")
