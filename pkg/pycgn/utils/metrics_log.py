"""CSV metric logs."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Iterable


class MetricsLog:
    """Append-only CSV log with a fixed header.

    Rows are kept in memory as well, so trainers can return their history
    without re-reading the file.
    """

    def __init__(self, columns: Iterable[str], path: str | Path | None = None) -> None:
        """Initialize the log, truncating path if given."""
        self.columns = list(columns)
        self.path = Path(path) if path is not None else None
        self.rows: list[dict[str, Any]] = []

        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="", encoding="utf-8") as handle:
                csv.writer(handle).writerow(self.columns)

    def append(self, **values: Any) -> None:
        """Append one row; unknown columns raise KeyError."""
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"Unknown metric columns: {sorted(unknown)}")

        row = {column: values.get(column, "") for column in self.columns}
        self.rows.append(row)

        if self.path is not None:
            with open(self.path, "a", newline="", encoding="utf-8") as handle:
                csv.writer(handle).writerow([row[column] for column in self.columns])

    def column(self, name: str) -> list[Any]:
        """Return all values recorded for a column."""
        return [row[name] for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)
