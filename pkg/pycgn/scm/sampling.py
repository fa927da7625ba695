"""Interventional and counterfactual sampling from a MechanismSet."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from ..const import COLORED, DOUBLE_COLORED, MAX_CF_RATIO, NUM_CLASSES, TRIPLE_SPACE
from ..exceptions import InvalidArgumentError, InvalidDatasetError
from ..helpers import numpy_rng, torch_generator
from .layers import compose
from .mechanisms import MechanismSet

_LOGGER = logging.getLogger(__name__)

LabelLike = Union[int, torch.Tensor]

SAMPLE_BATCH = 500


class LabelTriple(NamedTuple):
    """Per-mechanism class labels (shape, foreground, background)."""

    y_shape: LabelLike
    y_fg: LabelLike
    y_bg: LabelLike

    @classmethod
    def uniform(cls, y: LabelLike) -> "LabelTriple":
        """The training-time triple: one label for every mechanism."""
        return cls(y, y, y)


class ScmSample:
    """Outputs of one forward pass; tensors carry a leading batch axis.

    m is B x 1 x H x W, f, b and x_gen are B x 3 x H x W.
    """

    def __init__(
        self,
        m: torch.Tensor,
        f: torch.Tensor,
        b: torch.Tensor,
        x_gen: torch.Tensor,
        labels: LabelTriple,
        u: torch.Tensor,
    ) -> None:
        self.m = m
        self.f = f
        self.b = b
        self.x_gen = x_gen
        self.labels = labels
        self.u = u

    @property
    def mu_mask(self) -> float:
        """Batch-mean mask value."""
        return float(self.m.mean())

    def __len__(self) -> int:
        return self.x_gen.shape[0]


def _label_tensor(y: LabelLike, batch: int, device: torch.device) -> torch.Tensor:
    y = torch.as_tensor(y, dtype=torch.long, device=device)
    if y.dim() == 0:
        y = y.expand(batch)
    if y.numel() and (y.min() < 0 or y.max() >= NUM_CLASSES):
        raise InvalidArgumentError(f"labels must lie in 0..{NUM_CLASSES - 1}")
    return y


def _noise_batch(mechs: MechanismSet, u: torch.Tensor) -> torch.Tensor:
    device = next(mechs.parameters()).device
    u = u.to(device)
    return u.unsqueeze(0) if u.dim() == 1 else u


@torch.no_grad()
def forward_scm(mechs: MechanismSet, u: torch.Tensor, labels: LabelTriple) -> ScmSample:
    """Run the three mechanisms and the composer in eval mode.

    Args:
        mechs (MechanismSet): Trained or freshly initialized mechanisms.
        u (torch.Tensor): Noise vector (input_dim,) or batch (B, input_dim).
        labels (LabelTriple): Ints or length-B tensors per mechanism.

    Raises:
        InvalidArgumentError: A label is outside 0..9.
    """
    u = _noise_batch(mechs, u)
    batch, device = u.shape[0], u.device
    ys = [_label_tensor(y, batch, device) for y in labels]

    was_training = mechs.training
    mechs.eval()
    try:
        m, f, b, x = mechs(u, *ys)
    finally:
        mechs.train(was_training)
    return ScmSample(m, f, b, x, LabelTriple(*ys), u)


def sample_noise(mechs: MechanismSet, n: int, seed: int, *tags) -> torch.Tensor:
    """n spherical Gaussian noise vectors, seed-deterministic."""
    gen = torch_generator(seed, "noise", *tags)
    return torch.randn(n, mechs.input_dim, generator=gen)


class CounterfactualSet(Dataset):
    """Counterfactual images with the label triple fed to the mechanisms."""

    def __init__(self, images: torch.Tensor, labels: torch.Tensor, variant: str = DOUBLE_COLORED):
        """Initialize the set.

        Args:
            images (torch.Tensor): N x 3 x H x W in [0, 1].
            labels (torch.Tensor): N x 3 (shape, fg, bg) label triples.
        """
        if images.shape[0] != labels.shape[0] or (labels.dim() != 2 or labels.shape[1] != 3):
            raise InvalidDatasetError("counterfactual labels must be N x 3 and match the images")
        self.images = images.float()
        self.labels = labels.long()
        self.variant = variant

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __getitem__(self, index: int):
        return self.images[index], self.labels[index]

    def save(self, path: str | Path) -> Path:
        """Write as an npz container."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(
            path,
            images=self.images.numpy().astype(np.float32),
            labels=self.labels.numpy().astype(np.int64),
            variant=np.array(self.variant),
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> "CounterfactualSet":
        """Read a set written by save."""
        with np.load(path) as data:
            return cls(
                torch.from_numpy(data["images"]),
                torch.from_numpy(data["labels"]),
                str(data["variant"]),
            )

    @classmethod
    def empty(cls, image_size: int, variant: str = DOUBLE_COLORED) -> "CounterfactualSet":
        """A set with no samples."""
        return cls(torch.zeros(0, 3, image_size, image_size), torch.zeros(0, 3, dtype=torch.long), variant)


def draw_label_triples(
    n_noise: int, cf_ratio: int, rng: np.random.Generator, variant: str = DOUBLE_COLORED
) -> np.ndarray:
    """cf_ratio distinct label triples per noise draw, n_noise * cf_ratio x 3.

    For colored MNIST the background carries no class, so per noise the shape
    label is drawn once, the foreground labels are distinct, and the
    background label follows the shape label.
    """
    if n_noise < 1:
        raise InvalidArgumentError("n_noise must be >= 1")
    limit = MAX_CF_RATIO.get(variant, TRIPLE_SPACE)
    if not 1 <= cf_ratio <= limit:
        raise InvalidArgumentError(
            f"cf_ratio must lie in [1, {limit}] for {variant}, got {cf_ratio}"
        )

    triples = np.empty((n_noise, cf_ratio, 3), dtype=np.int64)
    for i in range(n_noise):
        if variant == COLORED:
            shape = rng.integers(0, NUM_CLASSES)
            triples[i, :, 0] = shape
            triples[i, :, 1] = rng.choice(NUM_CLASSES, size=cf_ratio, replace=False)
            triples[i, :, 2] = shape
        else:
            codes = rng.choice(TRIPLE_SPACE, size=cf_ratio, replace=False)
            triples[i, :, 0] = codes // (NUM_CLASSES * NUM_CLASSES)
            triples[i, :, 1] = (codes // NUM_CLASSES) % NUM_CLASSES
            triples[i, :, 2] = codes % NUM_CLASSES
    return triples.reshape(-1, 3)


def sample_counterfactual_set(
    mechs: MechanismSet,
    n_noise: int,
    cf_ratio: int,
    seed: int,
    variant: str = DOUBLE_COLORED,
    batch_size: int = SAMPLE_BATCH,
) -> CounterfactualSet:
    """Fix each noise draw and render it under cf_ratio distinct label triples.

    Raises:
        InvalidArgumentError: n_noise < 1 or cf_ratio above the variant maximum.
    """
    triples = draw_label_triples(n_noise, cf_ratio, numpy_rng(seed, "cf-labels"), variant)
    noise = sample_noise(mechs, n_noise, seed, "cf").repeat_interleave(cf_ratio, dim=0)
    labels = torch.from_numpy(triples)

    images = []
    for start in range(0, labels.shape[0], batch_size):
        chunk = labels[start : start + batch_size]
        sample = forward_scm(
            mechs, noise[start : start + batch_size], LabelTriple(chunk[:, 0], chunk[:, 1], chunk[:, 2])
        )
        images.append(sample.x_gen.cpu())

    _LOGGER.debug("Sampled %s counterfactuals (%s noise x %s)", labels.shape[0], n_noise, cf_ratio)
    return CounterfactualSet(torch.cat(images), labels, variant)


def interpolate(
    mechs: MechanismSet,
    start: tuple[torch.Tensor, LabelTriple],
    end: tuple[torch.Tensor, LabelTriple],
    steps: int,
) -> list[ScmSample]:
    """Walk linearly in noise space and in each mechanism's embedding space.

    Frames are rendered one at a time, so the endpoints equal forward_scm of
    the endpoints bit for bit.

    Raises:
        InvalidArgumentError: steps < 2.
    """
    if steps < 2:
        raise InvalidArgumentError("steps must be >= 2")

    (u1, y1), (u2, y2) = start, end
    u1, u2 = _noise_batch(mechs, u1), _noise_batch(mechs, u2)
    device = u1.device
    ys1 = [_label_tensor(y, 1, device) for y in y1]
    ys2 = [_label_tensor(y, 1, device) for y in y2]
    nets = list(mechs.mechanisms().values())

    frames = []
    was_training = mechs.training
    mechs.eval()
    try:
        with torch.no_grad():
            e1 = [net.embed(y) for net, y in zip(nets, ys1)]
            e2 = [net.embed(y) for net, y in zip(nets, ys2)]
            for step in range(steps):
                alpha = step / (steps - 1)
                u = torch.lerp(u1, u2, alpha)
                embs = [torch.lerp(a, b, alpha) for a, b in zip(e1, e2)]
                noises = mechs.split_noise(u)
                m, f, b = (net.forward_embedded(n, e) for net, n, e in zip(nets, noises, embs))
                x = compose(m, f, b, validate=False)
                labels = LabelTriple(*(y_a if alpha < 0.5 else y_b for y_a, y_b in zip(ys1, ys2)))
                frames.append(ScmSample(m, f, b, x, labels, u))
    finally:
        mechs.train(was_training)
    return frames
