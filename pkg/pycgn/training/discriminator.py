"""Label-projection conditional discriminator."""

from __future__ import annotations

import torch
from torch import nn

from ..const import NUM_CLASSES

CHANNELS = (64, 128, 256)


class ProjectionDiscriminator(nn.Module):
    """DCGAN-style convolutional critic with a class projection term.

    The logit is linear(h) + <embed(y), h>, where h is the pooled feature
    of the image.
    """

    def __init__(self, in_channels: int = 3, n_classes: int = NUM_CLASSES) -> None:
        super().__init__()
        layers: list[nn.Module] = []
        prev = in_channels
        for idx, width in enumerate(CHANNELS):
            layers.append(nn.Conv2d(prev, width, 4, 2, 1, bias=idx == 0))
            if idx:
                layers.append(nn.BatchNorm2d(width))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            prev = width
        self.features = nn.Sequential(*layers)
        self.linear = nn.Linear(prev, 1)
        self.embedding = nn.Embedding(n_classes, prev)

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        h = self.features(x).sum(dim=(2, 3))
        return self.linear(h).squeeze(1) + (self.embedding(y) * h).sum(dim=1)
