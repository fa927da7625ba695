"""Fixed layers of the causal model: the composer and the patch shuffle."""

from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

from ..const import SHUFFLE_PATCH
from ..exceptions import InvalidArgumentError, InvalidMaskError


def compose(
    m: torch.Tensor, f: torch.Tensor, b: torch.Tensor, validate: bool = True
) -> torch.Tensor:
    """Alpha-blend foreground over background: m * f + (1 - m) * b.

    Args:
        m (torch.Tensor): Mask in [0, 1], broadcastable against f and b.
        f (torch.Tensor): Foreground.
        b (torch.Tensor): Background.
        validate (bool): Check shapes and the mask range.

    Raises:
        InvalidArgumentError: The shapes do not broadcast.
        InvalidMaskError: The mask leaves [0, 1].
    """
    if validate:
        try:
            torch.broadcast_shapes(m.shape, f.shape, b.shape)
        except RuntimeError as err:
            raise InvalidArgumentError(
                f"cannot compose shapes {tuple(m.shape)}, {tuple(f.shape)}, {tuple(b.shape)}"
            ) from err
        if (~((m >= 0) & (m <= 1))).any():
            raise InvalidMaskError("mask values must lie in [0, 1]")

    return m * f + (1 - m) * b


def _tile_grid(x: torch.Tensor, patch: int) -> tuple[int, int]:
    height, width = x.shape[-2], x.shape[-1]
    if patch <= 0 or height % patch or width % patch:
        raise InvalidArgumentError(
            f"image of {height}x{width} is not divisible into {patch}x{patch} tiles"
        )
    return height // patch, width // patch


def shuffle_tiles(x: torch.Tensor, patch: int, perm: torch.Tensor) -> torch.Tensor:
    """Rearrange the patch x patch tiles of x (B x C x H x W).

    Tiles are numbered row-major; output tile i is input tile perm[..., i].
    perm is either one permutation or one per batch element.
    """
    rows, cols = _tile_grid(x, patch)
    batch, channels = x.shape[0], x.shape[1]
    tiles = (
        x.reshape(batch, channels, rows, patch, cols, patch)
        .permute(0, 2, 4, 1, 3, 5)
        .reshape(batch, rows * cols, channels, patch, patch)
    )

    perm = perm.to(x.device).long()
    if perm.dim() == 1:
        perm = perm.unsqueeze(0).expand(batch, -1)
    index = perm[:, :, None, None, None].expand_as(tiles)
    tiles = torch.gather(tiles, 1, index)

    return (
        tiles.reshape(batch, rows, cols, channels, patch, patch)
        .permute(0, 3, 1, 4, 2, 5)
        .reshape(batch, channels, rows * patch, cols * patch)
    )


def patch_shuffle(
    x: torch.Tensor,
    patch: int = SHUFFLE_PATCH,
    seed: int | None = None,
    perm: Sequence[int] | torch.Tensor | None = None,
) -> torch.Tensor:
    """Shuffle the tiles of an image like a sliding puzzle.

    Args:
        x (torch.Tensor): C x H x W image or B x C x H x W batch.
        patch (int): Tile edge length; must divide H and W.
        seed (int, optional): Seed of the uniform random permutation.
        perm (Sequence[int], optional): Explicit permutation, overrides seed.

    Raises:
        InvalidArgumentError: H or W is not divisible by patch.
    """
    single = x.dim() == 3
    batch = x.unsqueeze(0) if single else x
    rows, cols = _tile_grid(batch, patch)

    if perm is None:
        gen = torch.Generator()
        if seed is not None:
            gen.manual_seed(seed)
        perm = torch.randperm(rows * cols, generator=gen)
    perm = torch.as_tensor(perm, dtype=torch.long)
    if perm.numel() != rows * cols:
        raise InvalidArgumentError(f"permutation must have {rows * cols} entries")

    out = shuffle_tiles(batch, patch, perm)
    return out.squeeze(0) if single else out


class PatchShuffle(nn.Module):
    """Final layer of the texture mechanisms.

    In training mode every sample gets its own uniform random tile
    permutation; in eval mode the layer is the identity.
    """

    def __init__(self, patch: int = SHUFFLE_PATCH) -> None:
        super().__init__()
        self.patch = patch

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not self.training:
            return x
        rows, cols = _tile_grid(x, self.patch)
        perm = torch.argsort(torch.rand(x.shape[0], rows * cols, device=x.device), dim=1)
        return shuffle_tiles(x, self.patch, perm)

    def extra_repr(self) -> str:
        return f"patch={self.patch}"
