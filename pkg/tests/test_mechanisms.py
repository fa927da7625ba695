"""Tests for the mechanisms and the structural causal model forward pass."""

import pytest
import torch

from pycgn.exceptions import InvalidArgumentError
from pycgn.scm import LabelTriple, MechanismSet, MonolithicGenerator, compose, forward_scm, sample_noise

from .conftest import TINY_NOISE


def test_output_shapes_and_ranges(mechs):
    u = sample_noise(mechs, 4, 0)
    sample = forward_scm(mechs, u, LabelTriple(1, 2, 3))
    assert sample.m.shape == (4, 1, 32, 32)
    for tensor in (sample.f, sample.b, sample.x_gen):
        assert tensor.shape == (4, 3, 32, 32)
    for tensor in (sample.m, sample.f, sample.b, sample.x_gen):
        assert tensor.min() >= 0 and tensor.max() <= 1
    assert len(sample) == 4
    assert 0.0 <= sample.mu_mask <= 1.0


def test_composite_is_composed_from_mechanism_outputs(mechs):
    sample = forward_scm(mechs, sample_noise(mechs, 2, 1), LabelTriple(0, 5, 9))
    assert torch.allclose(sample.x_gen, compose(sample.m, sample.f, sample.b))


def test_changing_one_label_leaves_other_mechanisms_untouched(mechs):
    u = sample_noise(mechs, 3, 2)
    a = forward_scm(mechs, u, LabelTriple(3, 5, 7))
    b = forward_scm(mechs, u, LabelTriple(3, 5, 2))
    assert torch.equal(a.m, b.m)
    assert torch.equal(a.f, b.f)
    assert not torch.equal(a.b, b.b)

    c = forward_scm(mechs, u, LabelTriple(4, 5, 7))
    assert torch.equal(a.f, c.f)
    assert torch.equal(a.b, c.b)


def test_forward_scm_restores_training_mode(mechs):
    mechs.train()
    forward_scm(mechs, sample_noise(mechs, 2, 0), LabelTriple(0, 0, 0))
    assert mechs.training


def test_forward_scm_rejects_out_of_range_labels(mechs):
    with pytest.raises(InvalidArgumentError):
        forward_scm(mechs, sample_noise(mechs, 1, 0), LabelTriple(10, 0, 0))


def test_independent_noise_slices():
    torch.manual_seed(0)
    mechs = MechanismSet(noise_dim=TINY_NOISE, shared_noise=False).eval()
    assert mechs.input_dim == 3 * TINY_NOISE
    u = sample_noise(mechs, 2, 0)
    a = forward_scm(mechs, u, LabelTriple(1, 1, 1))
    u2 = u.clone()
    u2[:, 2 * TINY_NOISE :] = 0.0
    b = forward_scm(mechs, u2, LabelTriple(1, 1, 1))
    assert torch.equal(a.m, b.m)
    assert torch.equal(a.f, b.f)
    assert not torch.equal(a.b, b.b)


def test_split_noise_rejects_wrong_size(mechs):
    with pytest.raises(InvalidArgumentError):
        mechs.split_noise(torch.zeros(1, TINY_NOISE + 1))


def test_architecture_hash_is_stable():
    torch.manual_seed(0)
    a = MechanismSet(noise_dim=TINY_NOISE)
    torch.manual_seed(1)
    b = MechanismSet(noise_dim=TINY_NOISE)
    assert a.architecture_hash() == b.architecture_hash()
    assert a.architecture_hash() != MechanismSet(noise_dim=TINY_NOISE * 2).architecture_hash()


def test_monolithic_generator_range():
    torch.manual_seed(0)
    gen = MonolithicGenerator(noise_dim=TINY_NOISE).eval()
    out = gen(torch.randn(3, TINY_NOISE), torch.tensor([0, 4, 9]))
    assert out.shape == (3, 3, 32, 32)
    assert out.min() >= 0 and out.max() <= 1
    assert set(gen.mechanisms()) == {"generator"}
