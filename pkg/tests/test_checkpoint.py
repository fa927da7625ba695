"""Tests for generator checkpoints."""

import pytest
import torch

from pycgn.exceptions import CorruptCheckpointError, FetchRequiredError
from pycgn.scm import LabelTriple, MechanismSet, MonolithicGenerator, forward_scm, sample_noise
from pycgn.training import load_checkpoint, read_index, save_checkpoint

from .conftest import TINY_NOISE


def test_mechanism_set_round_trip(mechs, tmp_path):
    save_checkpoint(mechs, tmp_path, step=7)
    loaded = load_checkpoint(tmp_path, expected_hash=mechs.architecture_hash())

    assert isinstance(loaded, MechanismSet)
    assert not loaded.training
    assert read_index(tmp_path)["step"] == 7

    u = sample_noise(mechs, 2, 0)
    y = LabelTriple(2, 4, 6)
    assert torch.equal(forward_scm(mechs, u, y).x_gen, forward_scm(loaded, u, y).x_gen)


def test_monolithic_round_trip(tmp_path):
    torch.manual_seed(0)
    gen = MonolithicGenerator(noise_dim=TINY_NOISE).eval()
    save_checkpoint(gen, tmp_path)
    loaded = load_checkpoint(tmp_path)

    assert isinstance(loaded, MonolithicGenerator)
    assert read_index(tmp_path)["kind"] == "cgan"
    u, y = torch.randn(2, TINY_NOISE), torch.tensor([1, 8])
    assert torch.equal(gen(u, y), loaded(u, y))


def test_wrong_expected_hash(mechs, tmp_path):
    save_checkpoint(mechs, tmp_path)
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(tmp_path, expected_hash="0" * 16)


def test_tampered_file_is_detected(mechs, tmp_path):
    save_checkpoint(mechs, tmp_path)
    with open(tmp_path / "f_text_bg.pt", "ab") as handle:
        handle.write(b"\0")
    with pytest.raises(CorruptCheckpointError):
        load_checkpoint(tmp_path)


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FetchRequiredError):
        load_checkpoint(tmp_path / "nowhere")
