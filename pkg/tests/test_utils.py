"""Tests for metric logs, records, seeding and image grids."""

import numpy as np
import pytest
import torch
from PIL import Image

from pycgn.helpers import derive_seed, numpy_rng
from pycgn.utils import MetricsLog, Record, grid_array, save_image_grid


def test_metrics_log_writes_csv(tmp_path):
    log = MetricsLog(("step", "loss"), tmp_path / "m.csv")
    log.append(step=1, loss=0.5)
    log.append(step=2)
    assert len(log) == 2
    assert log.column("loss") == [0.5, ""]
    assert (tmp_path / "m.csv").read_text().splitlines() == ["step,loss", "1,0.5", "2,"]


def test_metrics_log_rejects_unknown_columns():
    with pytest.raises(KeyError):
        MetricsLog(("step",)).append(step=1, loss=0.1)


def test_record_save_and_load(tmp_path):
    record = Record({"b": np.float32(0.5), "a": [1, 2]})
    path = record.save(tmp_path / "r.json")
    assert Record.load(path) == {"a": [1, 2], "b": 0.5}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_derive_seed_depends_on_tags():
    assert derive_seed(0, "train") == derive_seed(0, "train")
    assert derive_seed(0, "train") != derive_seed(0, "test")
    assert derive_seed(0, "train") != derive_seed(1, "train")
    assert 0 <= derive_seed(7, 0.9) < 2**32
    assert np.array_equal(numpy_rng(3, "a").integers(0, 100, 5), numpy_rng(3, "a").integers(0, 100, 5))


def test_image_grid_size(tmp_path):
    path = save_image_grid(torch.rand(12, 3, 8, 8), tmp_path / "g.png", nrow=4)
    with Image.open(path) as img:
        assert img.size == (4 * 10 + 2, 3 * 10 + 2)


def test_grid_repeats_single_channel():
    grid = grid_array(torch.ones(2, 1, 4, 4), nrow=2, padding=0)
    assert grid.shape == (4, 8, 3)
    assert (grid == 255).all()
