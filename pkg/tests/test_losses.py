"""Tests for the generator objective and the collapse monitor."""

import math
import warnings

import pytest
import torch
from torch import nn

from pycgn.const import ADVERSARIAL, RECONSTRUCTION
from pycgn.exceptions import InvalidArgumentError, InvalidMaskError
from pycgn.losses import (
    CollapseMonitor,
    CollapseState,
    LossWeights,
    adversarial_losses,
    binary_entropy_loss,
    check_collapse,
    is_finite,
    mask_bounds_loss,
    reconstruction_loss,
    total_cgn_loss,
)
from pycgn.scm import LabelTriple, ScmSample, compose


class ZeroLogitDiscriminator(nn.Module):
    """D(x, y) = 0.5 everywhere."""

    def __init__(self):
        super().__init__()
        self.bias = nn.Parameter(torch.zeros(1))

    def forward(self, x, y):
        return self.bias.expand(x.shape[0]) + 0 * x.flatten(1).sum(1)


def _sample(m_value=0.5, n=2):
    m = torch.full((n, 1, 4, 4), m_value, requires_grad=True)
    f = torch.rand(n, 3, 4, 4)
    b = torch.rand(n, 3, 4, 4)
    y = torch.zeros(n, dtype=torch.long)
    return ScmSample(m, f, b, m * f + (1 - m) * b, LabelTriple.uniform(y), torch.zeros(n, 8))


@pytest.mark.parametrize("value, expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.25, 0.811278)])
def test_binary_entropy_in_bits(value, expected):
    assert binary_entropy_loss(torch.full((2, 1, 4, 4), value)).item() == pytest.approx(expected, abs=1e-5)


def test_binary_entropy_is_zero_iff_binary():
    m = torch.tensor([0.0, 1.0, 1.0, 0.0])
    assert binary_entropy_loss(m).item() == pytest.approx(0.0, abs=1e-6)
    assert binary_entropy_loss(torch.tensor([0.0, 1.0, 0.01])).item() > 0


def test_binary_entropy_rejects_invalid_masks():
    with pytest.raises(InvalidMaskError):
        binary_entropy_loss(torch.tensor([1.2]))


@pytest.mark.parametrize("mu, expected", [(0.5, 0.0), (0.05, 0.05), (0.97, 0.07), (0.1, 0.0), (0.9, 0.0)])
def test_mask_bounds_hinge(mu, expected):
    assert mask_bounds_loss(torch.full((3, 1, 4, 4), mu), 0.1).item() == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("tau", [0.0, 0.5, 0.6, -0.1])
def test_mask_bounds_rejects_tau(tau):
    with pytest.raises(InvalidArgumentError):
        mask_bounds_loss(torch.full((1, 1, 2, 2), 0.5), tau)


def test_tau_error_names_the_interval():
    with pytest.raises(InvalidArgumentError, match=r"\[tau, 1 - tau\]"):
        LossWeights(tau=0.6).validate()


def test_gan_losses_at_chance():
    d = ZeroLogitDiscriminator()
    x = torch.rand(4, 3, 4, 4)
    y = torch.zeros(4, dtype=torch.long)
    loss_g, loss_d = adversarial_losses(d, x, x.clone(), y)
    assert loss_g.item() == pytest.approx(math.log(2), abs=1e-6)
    assert loss_d.item() == pytest.approx(2 * math.log(2), abs=1e-6)


def test_gan_losses_reject_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        adversarial_losses(ZeroLogitDiscriminator(), torch.rand(2, 3, 4, 4), torch.rand(3, 3, 4, 4), torch.zeros(2))


def test_reconstruction_loss_is_mean_absolute_error():
    assert reconstruction_loss(torch.zeros(2, 3, 2, 2), torch.full((2, 3, 2, 2), 0.25)).item() == pytest.approx(0.25)
    with pytest.raises(InvalidArgumentError):
        reconstruction_loss(torch.zeros(1, 3, 2, 2), torch.zeros(1, 3, 4, 4))


def test_total_loss_adversarial_breakdown():
    total, breakdown = total_cgn_loss(_sample(0.5), LossWeights(), ADVERSARIAL, discriminator=ZeroLogitDiscriminator())
    assert set(breakdown) == {"binary", "mask", "adv_or_rec", "total"}
    assert breakdown["binary"] == pytest.approx(1.0, abs=1e-5)
    assert breakdown["mask"] == pytest.approx(0.0)
    assert breakdown["total"] == pytest.approx(1.0 + math.log(2), abs=1e-5)
    total.backward()
    assert is_finite(breakdown)


def test_total_loss_reconstruction_uses_weights():
    sample = _sample(1.0)
    weights = LossWeights(lambda_binary=0.0, lambda_mask=2.0, lambda_rec=3.0)
    _, breakdown = total_cgn_loss(sample, weights, RECONSTRUCTION, x_gt=sample.x_gen.detach() + 0.1)
    assert breakdown["mask"] == pytest.approx(0.1, abs=1e-6)
    assert breakdown["adv_or_rec"] == pytest.approx(0.1, abs=1e-5)
    assert breakdown["total"] == pytest.approx(2.0 * 0.1 + 3.0 * 0.1, abs=1e-5)


def test_total_loss_requires_mode_inputs():
    with pytest.raises(InvalidArgumentError):
        total_cgn_loss(_sample(), LossWeights(), ADVERSARIAL)
    with pytest.raises(InvalidArgumentError):
        total_cgn_loss(_sample(), LossWeights(), RECONSTRUCTION)
    with pytest.raises(InvalidArgumentError):
        total_cgn_loss(_sample(), LossWeights(), "perceptual")


def test_reserved_perceptual_weight():
    with pytest.raises(InvalidArgumentError):
        LossWeights(lambda_perc=1.0).validate()


def test_is_finite_flags_nan():
    assert not is_finite({"total": float("nan")})


@pytest.mark.parametrize("mu, state", [(0.01, CollapseState.COLLAPSED_TO_BG), (0.99, CollapseState.COLLAPSED_TO_FG)])
def test_collapse_monitor_aborts_after_patience(mu, state):
    monitor = CollapseMonitor(tau=0.1, window=10, patience=3)
    verdicts = [monitor.push(mu) for _ in range(29)]
    assert not monitor.should_abort
    assert verdicts.count(state) == 2
    monitor.push(mu)
    assert monitor.state == state
    assert monitor.should_abort


def test_collapse_monitor_resets_on_healthy_window():
    monitor = CollapseMonitor(tau=0.1, window=5, patience=2)
    check_collapse(monitor, [0.0] * 5)
    assert monitor.consecutive == 1
    check_collapse(monitor, [0.5] * 5)
    assert monitor.consecutive == 0
    assert monitor.state == CollapseState.OK


def test_collapse_is_ok_until_a_window_closes():
    monitor = CollapseMonitor(tau=0.1, window=200)
    assert check_collapse(monitor, [0.0] * 199) == CollapseState.OK


def test_collapse_state_labels():
    assert CollapseState.COLLAPSED_TO_FG.label == "collapsed_to_fg"


class LinearDiscriminator(nn.Module):
    """Smooth float64 critic: <w, x> + bias[y]."""

    def __init__(self, n_features, seed=0):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.weight = nn.Parameter(torch.randn(n_features, generator=gen, dtype=torch.float64))
        self.bias = nn.Parameter(torch.randn(10, generator=gen, dtype=torch.float64))

    def forward(self, x, y):
        return x.flatten(1) @ self.weight + self.bias[y]


def _float64_parts(seed=3):
    gen = torch.Generator().manual_seed(seed)
    m = torch.rand(2, 1, 4, 4, generator=gen, dtype=torch.float64) * 0.8 + 0.1
    f = torch.rand(2, 3, 4, 4, generator=gen, dtype=torch.float64)
    b = torch.rand(2, 3, 4, 4, generator=gen, dtype=torch.float64)
    return m, f, b


def test_generator_adversarial_gradient_matches_finite_difference():
    m, f, b = _float64_parts()
    d = LinearDiscriminator(3 * 4 * 4)
    x_real = torch.rand(2, 3, 4, 4, dtype=torch.float64)
    y = torch.tensor([1, 7])

    def loss_g(mask):
        return adversarial_losses(d, x_real, compose(mask, f, b), y)[0]

    m = m.requires_grad_()
    (grad,) = torch.autograd.grad(loss_g(m), m)

    eps = 1e-6
    with torch.no_grad():
        plus, minus = m.clone(), m.clone()
        plus[0, 0, 1, 2] += eps
        minus[0, 0, 1, 2] -= eps
        numeric = (loss_g(plus) - loss_g(minus)).item() / (2 * eps)
    assert grad[0, 0, 1, 2].item() == pytest.approx(numeric, rel=1e-3)


def test_generator_adversarial_gradcheck():
    m, f, b = _float64_parts(4)
    d = LinearDiscriminator(3 * 4 * 4, seed=1)
    x_real = torch.rand(2, 3, 4, 4, dtype=torch.float64)
    y = torch.tensor([0, 3])
    m = m.requires_grad_()
    assert torch.autograd.gradcheck(lambda mask: adversarial_losses(d, x_real, compose(mask, f, b), y)[0], (m,))


def test_binary_entropy_gradcheck():
    m, _, _ = _float64_parts(5)
    assert torch.autograd.gradcheck(binary_entropy_loss, (m.requires_grad_(),))


@pytest.mark.parametrize("low, high", [(0.01, 0.08), (0.92, 0.99), (0.3, 0.7)])
def test_mask_bounds_gradcheck(low, high):
    gen = torch.Generator().manual_seed(6)
    m = torch.rand(2, 1, 4, 4, generator=gen, dtype=torch.float64) * (high - low) + low
    assert torch.autograd.gradcheck(lambda mask: mask_bounds_loss(mask, 0.1), (m.requires_grad_(),))


def test_mask_checks_reject_nan():
    m = torch.tensor([0.5, float("nan")])
    with pytest.raises(InvalidMaskError):
        binary_entropy_loss(m)
    with pytest.raises(InvalidMaskError):
        mask_bounds_loss(m, 0.1)


def test_breakdown_is_computed_without_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _, breakdown = total_cgn_loss(_sample(0.5), LossWeights(), ADVERSARIAL, discriminator=ZeroLogitDiscriminator())
    assert all(isinstance(value, float) for value in breakdown.values())
