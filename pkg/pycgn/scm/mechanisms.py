"""Label-conditioned generators for the three independent mechanisms."""

from __future__ import annotations

import hashlib

import torch
from torch import nn

from ..const import EMBEDDING_DIM, IMAGE_SIZE, NOISE_DIM, NUM_CLASSES, SHUFFLE_PATCH
from ..exceptions import InvalidArgumentError
from .layers import PatchShuffle, compose

BASE_CHANNELS = 256
BASE_SIZE = 2


def _up(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.ConvTranspose2d(in_ch, out_ch, 4, 2, 1, bias=False),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(True),
    )


class ConditionalGenerator(nn.Module):
    """Transposed-convolution generator: (u, y) -> C x 32 x 32.

    The class label enters through a learned embedding concatenated to the
    noise. Four upsampling stages take the 2x2 seed map to 32x32.
    """

    def __init__(
        self,
        out_channels: int,
        noise_dim: int = NOISE_DIM,
        n_classes: int = NUM_CLASSES,
        embedding_dim: int = EMBEDDING_DIM,
        image_size: int = IMAGE_SIZE,
    ) -> None:
        super().__init__()
        if image_size != BASE_SIZE * 16:
            raise InvalidArgumentError(f"generators produce {BASE_SIZE * 16}px images")

        self.noise_dim = noise_dim
        self.n_classes = n_classes
        self.embedding = nn.Embedding(n_classes, embedding_dim)
        self.project = nn.Sequential(
            nn.Linear(noise_dim + embedding_dim, BASE_CHANNELS * BASE_SIZE * BASE_SIZE),
            nn.BatchNorm1d(BASE_CHANNELS * BASE_SIZE * BASE_SIZE),
            nn.ReLU(True),
        )
        self.body = nn.Sequential(
            _up(BASE_CHANNELS, 128),
            _up(128, 64),
            _up(64, 32),
            nn.ConvTranspose2d(32, out_channels, 4, 2, 1),
        )

    def embed(self, y: torch.Tensor) -> torch.Tensor:
        """Class embedding of label indices."""
        return self.embedding(y)

    def forward_embedded(self, u: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        """Raw output (before the output nonlinearity) for an embedding."""
        h = self.project(torch.cat([u, emb], dim=1))
        h = h.view(-1, BASE_CHANNELS, BASE_SIZE, BASE_SIZE)
        return self.body(h)

    def forward(self, u: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return self.forward_embedded(u, self.embed(y))


class ShapeMechanism(ConditionalGenerator):
    """f_shape: sigmoid-bounded single channel mask."""

    def __init__(self, **kwargs) -> None:
        super().__init__(out_channels=1, **kwargs)

    def forward_embedded(self, u: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(super().forward_embedded(u, emb))


class TextureMechanism(ConditionalGenerator):
    """f_text: RGB texture in [0, 1], tile-shuffled while training."""

    def __init__(self, patch: int = SHUFFLE_PATCH, **kwargs) -> None:
        super().__init__(out_channels=3, **kwargs)
        self.shuffle = PatchShuffle(patch)

    def forward_embedded(self, u: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        out = (torch.tanh(super().forward_embedded(u, emb)) + 1) / 2
        return self.shuffle(out)


class MechanismSet(nn.Module):
    """f_shape, f_text_fg and f_text_bg plus the fixed composer.

    With shared_noise (default) one noise vector of size noise_dim feeds all
    mechanisms. Otherwise the noise has 3 * noise_dim entries and each
    mechanism reads its own slice.
    """

    def __init__(
        self,
        noise_dim: int = NOISE_DIM,
        n_classes: int = NUM_CLASSES,
        shared_noise: bool = True,
        patch: int = SHUFFLE_PATCH,
        image_size: int = IMAGE_SIZE,
    ) -> None:
        super().__init__()
        self.noise_dim = noise_dim
        self.n_classes = n_classes
        self.shared_noise = shared_noise
        self.patch = patch
        self.image_size = image_size

        common = {"noise_dim": noise_dim, "n_classes": n_classes, "image_size": image_size}
        self.f_shape = ShapeMechanism(**common)
        self.f_text_fg = TextureMechanism(patch=patch, **common)
        self.f_text_bg = TextureMechanism(patch=patch, **common)

    @property
    def input_dim(self) -> int:
        """Size of the noise vector the set consumes."""
        return self.noise_dim if self.shared_noise else 3 * self.noise_dim

    def split_noise(self, u: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Noise inputs for (shape, fg, bg)."""
        if u.shape[-1] != self.input_dim:
            raise InvalidArgumentError(f"noise must have {self.input_dim} entries, got {u.shape[-1]}")
        if self.shared_noise:
            return u, u, u
        return torch.split(u, self.noise_dim, dim=-1)

    def mechanisms(self) -> dict[str, ConditionalGenerator]:
        """Mechanisms by name, in (shape, fg, bg) order."""
        return {"f_shape": self.f_shape, "f_text_fg": self.f_text_fg, "f_text_bg": self.f_text_bg}

    def architecture(self) -> dict:
        """Hyperparameters that determine parameter shapes."""
        return {
            "noise_dim": self.noise_dim,
            "n_classes": self.n_classes,
            "shared_noise": self.shared_noise,
            "patch": self.patch,
            "image_size": self.image_size,
        }

    def architecture_hash(self) -> str:
        """Hash of every parameter name and shape."""
        return architecture_hash(self)

    def forward(
        self,
        u: torch.Tensor,
        y_shape: torch.Tensor,
        y_fg: torch.Tensor,
        y_bg: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Return mask, foreground, background and composite."""
        u_shape, u_fg, u_bg = self.split_noise(u)
        m = self.f_shape(u_shape, y_shape)
        f = self.f_text_fg(u_fg, y_fg)
        b = self.f_text_bg(u_bg, y_bg)
        return m, f, b, compose(m, f, b, validate=False)


class MonolithicGenerator(ConditionalGenerator):
    """Unconstrained conditional generator (u, y) -> RGB image in [0, 1].

    Serves as the pseudo ground truth source and as the plain GAN baseline.
    """

    def __init__(
        self, noise_dim: int = NOISE_DIM, n_classes: int = NUM_CLASSES, image_size: int = IMAGE_SIZE
    ) -> None:
        super().__init__(out_channels=3, noise_dim=noise_dim, n_classes=n_classes, image_size=image_size)
        self.image_size = image_size

    def forward_embedded(self, u: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        return (torch.tanh(super().forward_embedded(u, emb)) + 1) / 2

    @property
    def input_dim(self) -> int:
        return self.noise_dim

    def mechanisms(self) -> dict[str, nn.Module]:
        """The single network, under the name its checkpoint file uses."""
        return {"generator": self}

    def architecture(self) -> dict:
        return {"noise_dim": self.noise_dim, "n_classes": self.n_classes, "image_size": self.image_size}

    def architecture_hash(self) -> str:
        return architecture_hash(self)


def architecture_hash(module: nn.Module) -> str:
    """Hash of the class name plus every state entry's name and shape."""
    digest = hashlib.sha256(type(module).__name__.encode("utf-8"))
    for name, tensor in module.state_dict().items():
        digest.update(f"{name}:{tuple(tensor.shape)}".encode("utf-8"))
    return digest.hexdigest()[:16]
