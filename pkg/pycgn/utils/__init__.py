"""Utils."""

from __future__ import annotations

from .images import grid_array, save_image_grid
from .metrics_log import MetricsLog
from .record import Record, atomic_write_text
from .requests import download

__all__ = [
    MetricsLog,
    Record,
    atomic_write_text,
    download,
    grid_array,
    save_image_grid,
]
