"""Shared-backbone CNN classifiers with one head per factor."""

from __future__ import annotations

from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from ..const import BACKBONE_CHANNELS, FEATURE_DIM, HEAD_ROLES, HEAD_SHAPE, NUM_CLASSES
from ..exceptions import InvalidArgumentError

ENSEMBLE = "ensemble"


class Backbone(nn.Module):
    """Three stride-2 conv blocks, global pooling and a FEATURE_DIM projection."""

    def __init__(self, in_channels: int = 3, channels: Sequence[int] = BACKBONE_CHANNELS) -> None:
        super().__init__()
        blocks: list[nn.Module] = []
        prev = in_channels
        for width in channels:
            blocks += [
                nn.Conv2d(prev, width, 3, stride=2, padding=1),
                nn.BatchNorm2d(width),
                nn.ReLU(inplace=True),
            ]
            prev = width
        self.conv = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.project = nn.Sequential(nn.Linear(prev, FEATURE_DIM), nn.ReLU(inplace=True))
        self.channels = tuple(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.project(self.pool(self.conv(x)).flatten(1))


def ensemble_log_probs(log_probs: Sequence[torch.Tensor]) -> torch.Tensor:
    """Average per-head log-probabilities and renormalize.

    The result is the log of the normalized geometric mean of the head
    distributions.
    """
    return torch.log_softmax(torch.stack(list(log_probs)).mean(dim=0), dim=-1)


class ClassifierModel(nn.Module):
    """Backbone plus one 10-way linear head per role.

    All methods of the classifier lab build this same backbone, so their
    parameter counts agree.
    """

    def __init__(self, head_roles: Sequence[str] = (HEAD_SHAPE,), n_classes: int = NUM_CLASSES) -> None:
        super().__init__()
        roles = tuple(head_roles)
        if not roles or len(set(roles)) != len(roles) or not set(roles) <= set(HEAD_ROLES):
            raise InvalidArgumentError(f"head_roles must be distinct entries of {HEAD_ROLES}, got {roles}")
        self.head_roles = roles
        self.n_classes = n_classes
        self.backbone = Backbone()
        self.heads = nn.ModuleDict({role: nn.Linear(FEATURE_DIM, n_classes) for role in roles})

    @property
    def architecture_id(self) -> str:
        """Identifier of the backbone layout."""
        widths = "-".join(str(c) for c in self.backbone.channels)
        return f"cnn-{widths}-f{FEATURE_DIM}"

    def backbone_parameter_count(self) -> int:
        return sum(p.numel() for p in self.backbone.parameters())

    def forward(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        """Logits per head role."""
        h = self.backbone(x)
        return {role: head(h) for role, head in self.heads.items()}

    def check_head(self, head: str | None) -> str:
        """Resolve a head name; None selects the ensemble (or the only head).

        Raises:
            InvalidArgumentError: The head does not exist.
        """
        if head is None or head == ENSEMBLE:
            return ENSEMBLE if len(self.head_roles) > 1 else self.head_roles[0]
        if head not in self.heads:
            raise InvalidArgumentError(f"model has heads {self.head_roles}, not '{head}'")
        return head

    def combine(self, logits: dict[str, torch.Tensor], head: str | None = None) -> torch.Tensor:
        """Log-probabilities of one head or of the head ensemble."""
        head = self.check_head(head)
        if head == ENSEMBLE:
            return ensemble_log_probs([F.log_softmax(v, dim=-1) for v in logits.values()])
        return F.log_softmax(logits[head], dim=-1)

    def log_probs(self, x: torch.Tensor, head: str | None = None) -> torch.Tensor:
        return self.combine(self(x), head)

    @torch.no_grad()
    def predict(self, images: torch.Tensor, head: str | None = None, batch_size: int = 1000) -> torch.Tensor:
        """Argmax class per image, evaluated in eval mode."""
        self.check_head(head)
        device = next(self.parameters()).device
        was_training = self.training
        self.eval()
        try:
            preds = [
                self.log_probs(images[i : i + batch_size].to(device), head).argmax(dim=-1).cpu()
                for i in range(0, len(images), batch_size)
            ]
        finally:
            self.train(was_training)
        return torch.cat(preds) if preds else torch.zeros(0, dtype=torch.long)

    def accuracy(self, images: torch.Tensor, labels: torch.Tensor, head: str | None = None) -> float:
        """Top-1 accuracy against labels."""
        if len(labels) == 0:
            return 0.0
        return float((self.predict(images, head) == labels.cpu()).float().mean())
