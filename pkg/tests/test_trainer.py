"""Tests for the generator trainers and their configuration."""

import json

import numpy as np
import pytest
import torch

from pycgn.const import MANIFEST_NAME, RECONSTRUCTION
from pycgn.events import EventHandler, TrainingEvent
from pycgn.exceptions import ConfigError, InvalidArgumentError, InvalidDatasetError, NumericFailureError
from pycgn.scm import MechanismSet, MonolithicGenerator
from pycgn.training import CGANTrainer, CGNTrainer, TrainConfig, sample_cgan, train_cgan, train_cgn

from .conftest import TINY_NOISE


def _config(**kwargs):
    values = {"steps": 3, "batch_size": 8, "noise_dim": TINY_NOISE, "log_every": 1, "checkpoint_every": 2}
    values.update(kwargs)
    return TrainConfig(**values)


def test_zero_steps_keeps_initial_mechanisms(double_colored, tmp_path):
    run = train_cgn(_config(steps=0), double_colored[0], tmp_path)
    assert isinstance(run.mechanisms, MechanismSet)
    assert run.manifest["status"] == "ok"
    assert run.manifest["steps"] == 0
    assert (tmp_path / "checkpoint" / "checkpoint.json").exists()
    assert len(run.metrics) == 0


def test_tiny_adversarial_run(double_colored, tmp_path):
    seen = []
    events = EventHandler()
    events.set_handler(TrainingEvent.STEP_LOGGED, lambda step, losses: seen.append(step))

    run = train_cgn(_config(), double_colored[0], tmp_path, events=events)

    assert seen == [1, 2, 3]
    assert len(run.metrics) == 3
    assert all(0.0 <= mu <= 1.0 for mu in run.metrics.column("mu_mask"))
    assert not run.mechanisms.training
    run.manifest.verify()

    written = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert written["status"] == "ok"
    assert written["collapsed"] is False
    assert (tmp_path / "metrics.csv").exists()
    assert (tmp_path / "grids" / "step_000002.png").exists()


def test_reconstruction_mode_needs_a_cgan(double_colored):
    with pytest.raises(InvalidArgumentError):
        train_cgn(_config(mode=RECONSTRUCTION), double_colored[0])


def test_reconstruction_mode_with_frozen_cgan(double_colored):
    torch.manual_seed(0)
    pseudo_gt = MonolithicGenerator(noise_dim=TINY_NOISE)
    run = train_cgn(_config(mode=RECONSTRUCTION, steps=2), double_colored[0], pseudo_gt=pseudo_gt)
    assert len(run.metrics) == 2
    assert not any(p.requires_grad for p in pseudo_gt.parameters())


def test_training_rejects_test_split(double_colored):
    with pytest.raises(InvalidDatasetError):
        train_cgn(_config(), double_colored[1])


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"stepz": 10})


def test_config_from_file_with_overrides(tmp_path):
    path = tmp_path / "train.yaml"
    path.write_text("steps: 5\nbatch_size: 4\nweights:\n  tau: 0.2\n")
    config = TrainConfig.from_file(path, steps=2, seed=None)
    assert config.steps == 2
    assert config.batch_size == 4
    assert config.seed == 0
    assert config.weights.tau == 0.2
    config.validate()


def test_config_rejects_tau_above_half():
    config = TrainConfig.from_dict({"weights": {"tau": 0.6}})
    with pytest.raises(InvalidArgumentError):
        config.validate()


def test_cgan_train_and_sample(double_colored, tmp_path):
    generator, log = train_cgan(_config(steps=2), double_colored[0], tmp_path)
    assert len(log) == 2
    assert (tmp_path / "checkpoint" / "generator.pt").exists()

    images, labels = sample_cgan(generator, 20, seed=0, batch_size=7)
    assert images.shape == (20, 3, 32, 32)
    assert torch.bincount(labels, minlength=10).tolist() == [2] * 10
    assert images.min() >= 0 and images.max() <= 1


def _poison(module):
    with torch.no_grad():
        for param in module.parameters():
            param.fill_(float("nan"))


def test_nan_discriminator_marks_cgn_manifest(double_colored, tmp_path):
    trainer = CGNTrainer(_config())
    _poison(trainer.discriminator)
    with pytest.raises(NumericFailureError) as err:
        trainer.train(double_colored[0], tmp_path)
    assert err.value.step == 1
    written = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert written["status"] == "numeric_failure"
    assert written["steps"] == 1


def test_cgan_nan_loss_leaves_generator_untouched(double_colored):
    trainer = CGANTrainer(_config(steps=2))
    before = {name: value.detach().clone() for name, value in trainer.generator.named_parameters()}
    _poison(trainer.discriminator)
    with pytest.raises(NumericFailureError):
        trainer.train(double_colored[0])
    for name, value in trainer.generator.named_parameters():
        assert torch.equal(value, before[name]), name


def test_trainers_seed_the_global_generators():
    first = CGNTrainer(_config(seed=3))
    draw = np.random.rand()
    second = CGNTrainer(_config(seed=3))
    assert np.random.rand() == draw
    for a, b in zip(first.mechs.parameters(), second.mechs.parameters()):
        assert torch.equal(a, b)
