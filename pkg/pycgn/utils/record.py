"""A class set that helps representing run metadata as wanted."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any


class Record(dict):
    """A JSON-backed dict used for manifests and reports."""

    def __init__(self, default: dict[str, Any] | None = None) -> None:
        """Init dict."""
        super().__init__()

        if default:
            self.update(default)

    def to_json(self) -> str:
        """Serialize to an indented, key-sorted JSON string."""
        return json.dumps(self, indent=2, sort_keys=True, default=_json_default)

    def save(self, path: str | Path) -> Path:
        """Write atomically to path."""
        path = Path(path)
        atomic_write_text(path, self.to_json() + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Record":
        """Read a record previously written with save."""
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle))


def _json_default(value: Any) -> Any:
    """Convert numpy scalars and paths for json.dumps."""
    if hasattr(value, "item"):
        return value.item()
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to a temp file next to path, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
