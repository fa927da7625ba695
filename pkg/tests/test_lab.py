"""Tests for the CounterfactualLab facade."""

import pytest

from pycgn import CounterfactualLab, TrainingEvent
from pycgn.exceptions import InvalidArgumentError, InvalidDatasetError

from .conftest import TINY_NOISE


def test_lab_pipeline(tmp_path):
    steps = []
    with CounterfactualLab(tmp_path, synthetic=200) as lab:
        lab.set_callback(TrainingEvent.STEP_LOGGED, lambda step, losses: steps.append(step))
        with pytest.raises(InvalidDatasetError):
            lab.train_cgn(steps=1)

        train, test = lab.dataset(sigma=0.0)
        assert len(train) == 200 and len(test) == 40
        with pytest.raises(InvalidArgumentError):
            lab.sample(n_noise=2)

        lab.train_cgn(steps=2, batch_size=8, noise_dim=TINY_NOISE, log_every=1)
        assert steps == [1, 2]
        with pytest.raises(InvalidArgumentError):
            lab.classify("cgn", epochs=1)

        assert len(lab.sample(n_noise=4, cf_ratio=2)) == 8
        result = lab.classify("cgn", epochs=1)
        assert set(result) == {"train_acc", "test_acc"}
        with pytest.raises(InvalidArgumentError):
            lab.classify("irm")

    assert (tmp_path / "run.log").exists()
    assert (tmp_path / "cgn" / "checkpoint" / "checkpoint.json").exists()
