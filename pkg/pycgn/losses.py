"""Training objectives of the MNIST counterfactual generator and collapse monitoring."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass
from enum import IntEnum
from typing import Iterable

import torch
import torch.nn.functional as F
from torch import nn

from .const import ADVERSARIAL, COLLAPSE_PATIENCE, COLLAPSE_WINDOW, DEFAULT_TAU, LOG_EPS, MODES, RECONSTRUCTION
from .exceptions import InvalidArgumentError, InvalidMaskError

_LOGGER = logging.getLogger(__name__)


@dataclass
class LossWeights:
    """Weights of the generator objective.

    lambda_adv weights the adversarial term in adversarial mode, lambda_rec
    the L1 term in reconstruction mode. lambda_perc is reserved for a
    perceptual term and must stay 0.
    """

    lambda_binary: float = 1.0
    lambda_mask: float = 1.0
    lambda_adv: float = 1.0
    lambda_rec: float = 1.0
    lambda_perc: float = 0.0
    tau: float = DEFAULT_TAU

    def validate(self) -> "LossWeights":
        """Check the weights and return self.

        Raises:
            InvalidArgumentError: A weight is negative or tau is outside (0, 0.5).
        """
        _check_tau(self.tau)
        for name, value in asdict(self).items():
            if name != "tau" and value < 0:
                raise InvalidArgumentError(f"{name} must be >= 0, got {value}")
        if self.lambda_perc:
            raise InvalidArgumentError("lambda_perc is reserved and must be 0")
        return self

    def adv_or_rec(self, mode: str) -> float:
        """Weight of the mode-specific image term."""
        return self.lambda_adv if mode == ADVERSARIAL else self.lambda_rec


def _check_tau(tau: float) -> None:
    if not 0 < tau < 0.5:
        raise InvalidArgumentError(
            f"tau must lie in (0, 0.5) so that the mask interval [tau, 1 - tau] is non-empty, got {tau}"
        )


def _check_mask(m: torch.Tensor) -> None:
    if (~((m >= 0) & (m <= 1))).any():
        raise InvalidMaskError("mask values must lie in [0, 1]")


def binary_entropy_loss(m: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel binary entropy of the mask, in bits.

    Logs are clamped at LOG_EPS, so exactly binary masks give 0.

    Raises:
        InvalidMaskError: m leaves [0, 1].
    """
    _check_mask(m)
    ent = -m * torch.log2(m.clamp_min(LOG_EPS)) - (1 - m) * torch.log2((1 - m).clamp_min(LOG_EPS))
    return ent.mean()


def mask_bounds_loss(m: torch.Tensor, tau: float = DEFAULT_TAU) -> torch.Tensor:
    """Hinge keeping the batch-mean mask value inside [tau, 1 - tau].

    Raises:
        InvalidArgumentError: tau is outside (0, 0.5).
        InvalidMaskError: m leaves [0, 1].
    """
    _check_tau(tau)
    _check_mask(m)
    mu = m.mean()
    return F.relu(tau - mu) + F.relu(mu - (1 - tau))


def generator_adv_loss(discriminator: nn.Module, x_gen: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss -E[log D(x_gen, y)], from logits."""
    return F.softplus(-discriminator(x_gen, y)).mean()


def discriminator_adv_loss(
    discriminator: nn.Module, x_real: torch.Tensor, x_gen: torch.Tensor, y: torch.Tensor
) -> torch.Tensor:
    """-E[log D(x_real, y)] - E[log(1 - D(x_gen, y))], from logits.

    x_gen is detached, so only the discriminator receives gradients.
    """
    real = F.softplus(-discriminator(x_real, y)).mean()
    fake = F.softplus(discriminator(x_gen.detach(), y)).mean()
    return real + fake


def adversarial_losses(
    discriminator: nn.Module, x_real: torch.Tensor, x_gen: torch.Tensor, y: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Generator-side and discriminator-side conditional GAN losses.

    Args:
        discriminator (nn.Module): Returns one logit per (image, label).
        x_real (torch.Tensor): Real batch.
        x_gen (torch.Tensor): Generated batch, same shape as x_real.
        y (torch.Tensor): Conditioning labels.

    Returns:
        tuple: (generator loss, discriminator loss).

    Raises:
        InvalidArgumentError: x_real and x_gen differ in shape.
    """
    if x_real.shape != x_gen.shape:
        raise InvalidArgumentError(
            f"real and generated batches differ: {tuple(x_real.shape)} vs {tuple(x_gen.shape)}"
        )
    return (
        generator_adv_loss(discriminator, x_gen, y),
        discriminator_adv_loss(discriminator, x_real, x_gen, y),
    )


def reconstruction_loss(x_gt: torch.Tensor, x_gen: torch.Tensor) -> torch.Tensor:
    """Mean absolute error between pseudo ground truth and composite.

    Raises:
        InvalidArgumentError: The shapes differ.
    """
    if x_gt.shape != x_gen.shape:
        raise InvalidArgumentError(
            f"reconstruction target {tuple(x_gt.shape)} does not match {tuple(x_gen.shape)}"
        )
    return F.l1_loss(x_gen, x_gt)


def total_cgn_loss(
    sample,
    weights: LossWeights,
    mode: str = ADVERSARIAL,
    discriminator: nn.Module | None = None,
    x_gt: torch.Tensor | None = None,
) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted generator objective with its per-term breakdown.

    Args:
        sample (ScmSample): Output of the mechanisms, with gradients attached.
        weights (LossWeights): Term weights and tau.
        mode (str): "adversarial" or "reconstruction".
        discriminator (nn.Module, optional): Required in adversarial mode.
        x_gt (torch.Tensor, optional): Pseudo ground truth, required in reconstruction mode.

    Returns:
        tuple: (total, {"binary", "mask", "adv_or_rec", "total"} as floats).

    Raises:
        InvalidArgumentError: Unknown mode, negative weights or a missing input.
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode}")
    weights.validate()

    binary = binary_entropy_loss(sample.m)
    mask = mask_bounds_loss(sample.m, weights.tau)

    if mode == ADVERSARIAL:
        if discriminator is None:
            raise InvalidArgumentError("adversarial mode needs a discriminator")
        image_term = generator_adv_loss(discriminator, sample.x_gen, sample.labels.y_shape)
    else:
        if x_gt is None:
            raise InvalidArgumentError("reconstruction mode needs pseudo ground truth")
        image_term = reconstruction_loss(x_gt, sample.x_gen)

    total = (
        weights.lambda_binary * binary
        + weights.lambda_mask * mask
        + weights.adv_or_rec(mode) * image_term
    )
    breakdown = {
        "binary": binary.detach().item(),
        "mask": mask.detach().item(),
        "adv_or_rec": image_term.detach().item(),
        "total": total.detach().item(),
    }
    return total, breakdown


def is_finite(breakdown: dict[str, float]) -> bool:
    """True if every loss term is finite."""
    return all(math.isfinite(value) for value in breakdown.values())


class CollapseState(IntEnum):
    """Mask health verdicts."""

    OK = 0
    COLLAPSED_TO_FG = 1
    COLLAPSED_TO_BG = 2

    @property
    def label(self) -> str:
        """Lower-case name used in logs, events and manifests."""
        return self.name.lower()


class CollapseMonitor:
    """Tracks mu_mask over consecutive non-overlapping windows.

    A window is flagged when its mean mu_mask is below tau / 2 (mask all
    background) or above 1 - tau / 2 (mask all foreground).
    """

    def __init__(
        self, tau: float = DEFAULT_TAU, window: int = COLLAPSE_WINDOW, patience: int = COLLAPSE_PATIENCE
    ) -> None:
        _check_tau(tau)
        if window < 1 or patience < 1:
            raise InvalidArgumentError("window and patience must be >= 1")
        self.tau = tau
        self.window = window
        self.patience = patience
        self.low = tau / 2
        self.high = 1 - tau / 2
        self.history: deque[float] = deque(maxlen=window)
        self.state = CollapseState.OK
        self.consecutive = 0
        self._pending = 0

    def classify(self, mu: float) -> CollapseState:
        """Verdict for one windowed mean."""
        if mu < self.low:
            return CollapseState.COLLAPSED_TO_BG
        if mu > self.high:
            return CollapseState.COLLAPSED_TO_FG
        return CollapseState.OK

    def push(self, mu: float) -> CollapseState | None:
        """Record one mu_mask value; return the verdict when a window closes."""
        self.history.append(float(mu))
        self._pending += 1
        if self._pending < self.window:
            return None

        self._pending = 0
        self.state = self.classify(sum(self.history) / len(self.history))
        self.consecutive = self.consecutive + 1 if self.state != CollapseState.OK else 0
        if self.state != CollapseState.OK:
            _LOGGER.debug("Window flagged as %s (%s in a row)", self.state.label, self.consecutive)
        return self.state

    @property
    def should_abort(self) -> bool:
        """True after `patience` flagged windows in a row."""
        return self.consecutive >= self.patience


def check_collapse(monitor: CollapseMonitor, mu_stream: Iterable[float]) -> CollapseState:
    """Feed a mu_mask stream to the monitor and return the latest window verdict.

    Returns OK while no window has been completed.
    """
    for mu in mu_stream:
        monitor.push(mu)
    return monitor.state
