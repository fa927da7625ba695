"""Tests for the composer and the patch shuffle."""

import pytest
import torch

from pycgn.exceptions import InvalidArgumentError, InvalidMaskError
from pycgn.scm import PatchShuffle, compose, patch_shuffle


def _fb():
    gen = torch.Generator().manual_seed(0)
    return torch.rand(2, 3, 8, 8, generator=gen), torch.rand(2, 3, 8, 8, generator=gen)


def test_compose_full_mask_is_foreground():
    f, b = _fb()
    assert torch.equal(compose(torch.ones(2, 1, 8, 8), f, b), f)


def test_compose_empty_mask_is_background():
    f, b = _fb()
    assert torch.equal(compose(torch.zeros(2, 1, 8, 8), f, b), b)


def test_compose_blends_linearly():
    f = torch.full((1, 3, 2, 2), 1.0)
    b = torch.full((1, 3, 2, 2), 0.5)
    out = compose(torch.full((1, 1, 2, 2), 0.2), f, b)
    assert torch.allclose(out, torch.full_like(f, 0.2 * 1.0 + 0.8 * 0.5))


def test_compose_is_convex_combination():
    f, b = _fb()
    m = torch.rand(2, 1, 8, 8, generator=torch.Generator().manual_seed(1))
    out = compose(m, f, b)
    assert torch.all(out >= torch.minimum(f, b) - 1e-6)
    assert torch.all(out <= torch.maximum(f, b) + 1e-6)


def test_compose_rejects_mask_outside_unit_interval():
    f, b = _fb()
    with pytest.raises(InvalidMaskError):
        compose(torch.full((2, 1, 8, 8), 1.5), f, b)


def test_compose_rejects_mismatched_shapes():
    f, b = _fb()
    with pytest.raises(InvalidArgumentError):
        compose(torch.ones(2, 1, 4, 4), f, b)


def test_compose_gradients():
    gen = torch.Generator().manual_seed(2)
    m = (torch.rand(1, 1, 3, 3, generator=gen, dtype=torch.float64) * 0.8 + 0.1).requires_grad_()
    f = torch.rand(1, 3, 3, 3, generator=gen, dtype=torch.float64).requires_grad_()
    b = torch.rand(1, 3, 3, 3, generator=gen, dtype=torch.float64).requires_grad_()
    assert torch.autograd.gradcheck(lambda m, f, b: compose(m, f, b), (m, f, b), rtol=1e-3)


def test_compose_rejects_nan_mask():
    f, b = _fb()
    m = torch.full((2, 1, 8, 8), 0.5)
    m[1, 0, 3, 3] = float("nan")
    with pytest.raises(InvalidMaskError):
        compose(m, f, b)


def test_compose_is_linear_in_textures_for_a_fixed_mask():
    gen = torch.Generator().manual_seed(4)
    m = torch.rand(2, 1, 8, 8, generator=gen)
    f1, f2, b1, b2 = (torch.rand(2, 3, 8, 8, generator=gen) for _ in range(4))
    a, c = 0.3, -1.7
    combined = compose(m, a * f1 + c * f2, a * b1 + c * b2)
    assert torch.allclose(combined, a * compose(m, f1, b1) + c * compose(m, f2, b2), atol=1e-5)


def test_patch_shuffle_preserves_histogram():
    x = torch.rand(3, 32, 32, generator=torch.Generator().manual_seed(3))
    out = patch_shuffle(x, 4, seed=7)
    assert torch.equal(torch.sort(out.flatten()).values, torch.sort(x.flatten()).values)


def test_patch_shuffle_identity_permutation():
    x = torch.rand(3, 8, 8)
    assert torch.equal(patch_shuffle(x, 4, perm=[0, 1, 2, 3]), x)


def test_patch_shuffle_swaps_tiles():
    x = torch.arange(64, dtype=torch.float32).reshape(1, 8, 8)
    out = patch_shuffle(x, 4, perm=[1, 0, 3, 2])
    assert torch.equal(out[:, :4, :4], x[:, :4, 4:])
    assert torch.equal(out[:, :4, 4:], x[:, :4, :4])
    assert torch.equal(out[:, 4:, :4], x[:, 4:, 4:])
    assert torch.equal(out[:, 4:, 4:], x[:, 4:, :4])


def test_patch_shuffle_rejects_indivisible_images():
    with pytest.raises(InvalidArgumentError):
        patch_shuffle(torch.rand(3, 30, 30), 4)


def test_patch_shuffle_layer_is_identity_in_eval_mode():
    layer = PatchShuffle(4).eval()
    x = torch.rand(2, 3, 8, 8)
    assert torch.equal(layer(x), x)


def test_patch_shuffle_layer_shuffles_per_sample_in_training():
    torch.manual_seed(0)
    layer = PatchShuffle(4).train()
    x = torch.rand(4, 3, 32, 32)
    out = layer(x)
    assert not torch.equal(out, x)
    for i in range(4):
        assert torch.equal(torch.sort(out[i].flatten()).values, torch.sort(x[i].flatten()).values)
