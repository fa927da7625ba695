"""Texture bank used by Wildlife MNIST."""

from __future__ import annotations

import logging
import tarfile
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from ..const import (
    BG_TEXTURE_CLASS,
    DTD,
    DTD_URL,
    FG_TEXTURE_CLASS,
    IMAGE_SIZE,
    PROCEDURAL,
    TEXTURE_EXTENSIONS,
    TEXTURE_SIZE,
    TEXTURES_PER_ROLE,
)
from ..exceptions import (
    InsufficientTexturesError,
    InvalidArgumentError,
    InvalidDatasetError,
    InvalidTextureError,
)
from ..helpers import array_checksum, numpy_rng
from ..utils import download

_LOGGER = logging.getLogger(__name__)


class TextureBank:
    """Ten foreground ("striped") and ten background ("veiny") textures."""

    def __init__(
        self,
        fg_textures: list[np.ndarray],
        bg_textures: list[np.ndarray],
        source: str,
    ) -> None:
        """Initialize and validate the bank.

        Raises:
            InvalidTextureError: A texture is not H x W x 3 with H, W >= 32.
            InsufficientTexturesError: A role does not hold exactly ten textures.
        """
        self.fg_textures = [np.asarray(t, dtype=np.float32) for t in fg_textures]
        self.bg_textures = [np.asarray(t, dtype=np.float32) for t in bg_textures]
        self.source = source
        self.validate()

    def validate(self) -> None:
        """Check the bank invariants."""
        for role, textures in (("fg", self.fg_textures), ("bg", self.bg_textures)):
            if len(textures) != TEXTURES_PER_ROLE:
                raise InsufficientTexturesError(
                    f"{role} role holds {len(textures)} textures, "
                    f"expected {TEXTURES_PER_ROLE}"
                )
            for idx, tex in enumerate(textures):
                if tex.ndim != 3 or tex.shape[2] != 3:
                    raise InvalidTextureError(f"{role} texture {idx} is not RGB")
                if tex.shape[0] < IMAGE_SIZE or tex.shape[1] < IMAGE_SIZE:
                    raise InvalidTextureError(
                        f"{role} texture {idx} is {tex.shape[0]}x{tex.shape[1]}, "
                        f"smaller than {IMAGE_SIZE}x{IMAGE_SIZE}"
                    )

    def checksums(self) -> dict[str, list[str]]:
        """Per-texture checksums for dataset manifests."""
        return {
            "fg": [array_checksum(t) for t in self.fg_textures],
            "bg": [array_checksum(t) for t in self.bg_textures],
        }

    def patch(
        self, role: str, index: int, rng: np.random.Generator, size: int = IMAGE_SIZE
    ) -> np.ndarray:
        """Random size x size crop of texture `index` of the given role."""
        tex = (self.fg_textures if role == "fg" else self.bg_textures)[index]
        top = rng.integers(0, tex.shape[0] - size + 1)
        left = rng.integers(0, tex.shape[1] - size + 1)
        return tex[top : top + size, left : left + size]


def _two_colors(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A light and a dark random RGB colour."""
    light = rng.uniform(0.55, 1.0, size=3).astype(np.float32)
    dark = rng.uniform(0.0, 0.45, size=3).astype(np.float32)
    return light, dark


def striped_texture(index: int, rng: np.random.Generator, size: int = TEXTURE_SIZE) -> np.ndarray:
    """Oriented sinusoid grating; angle and frequency are fixed per index."""
    angle = np.pi * index / TEXTURES_PER_ROLE + rng.uniform(-0.05, 0.05)
    frequency = 0.08 + 0.025 * ((index * 3) % TEXTURES_PER_ROLE)
    phase = rng.uniform(0, 2 * np.pi)

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)
    proj = xx * np.cos(angle) + yy * np.sin(angle)
    wave = 0.5 + 0.5 * np.sin(2 * np.pi * frequency * proj + phase)

    light, dark = _two_colors(rng)
    return (wave[..., None] * light + (1 - wave[..., None]) * dark).astype(np.float32)


def veiny_texture(index: int, rng: np.random.Generator, size: int = TEXTURE_SIZE) -> np.ndarray:
    """Thresholded ridges of smoothed noise; the smoothing scale is fixed per index."""
    scale = 1.0 + 0.6 * index
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), scale, mode="wrap")
    noise = (noise - noise.min()) / max(noise.max() - noise.min(), 1e-8)
    ridge = 1.0 - np.abs(noise - 0.5) * 2.0
    veins = np.clip((ridge - 0.8) / 0.2, 0.0, 1.0).astype(np.float32)

    light, dark = _two_colors(rng)
    return (veins[..., None] * dark + (1 - veins[..., None]) * light).astype(np.float32)


def _read_texture(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def _texture_folder(directory: Path, name: str) -> Path:
    """DTD ships classes under images/; accept either layout."""
    for candidate in (directory / "images" / name, directory / name):
        if candidate.is_dir():
            return candidate
    raise InsufficientTexturesError(f"Texture class folder '{name}' not found in {directory}")


def _select_dtd(directory: Path, name: str) -> list[np.ndarray]:
    folder = _texture_folder(directory, name)
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() in TEXTURE_EXTENSIONS)
    if len(files) < TEXTURES_PER_ROLE:
        raise InsufficientTexturesError(
            f"'{name}' holds {len(files)} images, need {TEXTURES_PER_ROLE}"
        )
    return [_read_texture(p) for p in files[:TEXTURES_PER_ROLE]]


def ingest_textures(
    source: str = PROCEDURAL,
    seed: int = 0,
    directory: str | Path | None = None,
    size: int = TEXTURE_SIZE,
) -> TextureBank:
    """Build a texture bank.

    Args:
        source (str): "procedural" (default, offline) or "dtd".
        seed (int): Seed for the procedural textures.
        directory (str | Path, optional): DTD root when source is "dtd".
        size (int): Edge length of procedural textures.

    Returns:
        TextureBank: The validated bank.
    """
    if source == PROCEDURAL:
        rng_fg = numpy_rng(seed, "textures", FG_TEXTURE_CLASS)
        rng_bg = numpy_rng(seed, "textures", BG_TEXTURE_CLASS)
        fg = [striped_texture(k, rng_fg, size) for k in range(TEXTURES_PER_ROLE)]
        bg = [veiny_texture(k, rng_bg, size) for k in range(TEXTURES_PER_ROLE)]
        _LOGGER.debug("Synthesized procedural texture bank (seed %s)", seed)
        return TextureBank(fg, bg, PROCEDURAL)

    if source == DTD:
        if directory is None:
            raise InvalidArgumentError("dtd source requires a directory")
        directory = Path(directory)
        fg = _select_dtd(directory, FG_TEXTURE_CLASS)
        bg = _select_dtd(directory, BG_TEXTURE_CLASS)
        _LOGGER.debug("Loaded DTD texture bank from %s", directory)
        return TextureBank(fg, bg, DTD)

    raise InvalidArgumentError(f"Unknown texture source '{source}'")


def extract_archive(archive: str | Path, root: str | Path) -> None:
    """Unpack a tar archive, refusing members that leave root.

    Raises:
        InvalidDatasetError: A member is absolute, escapes root or is a link.
    """
    root = Path(root)
    with tarfile.open(archive) as tar:
        if hasattr(tarfile, "data_filter"):
            try:
                tar.extractall(root, filter="data")
            except tarfile.FilterError as err:
                raise InvalidDatasetError(f"unsafe member in {archive}: {err}") from err
            return

        # interpreters without extraction filters
        base = root.resolve()
        for member in tar.getmembers():
            target = (base / member.name).resolve()
            if member.issym() or member.islnk() or (target != base and base not in target.parents):
                raise InvalidDatasetError(f"unsafe member '{member.name}' in {archive}")
        tar.extractall(root)


def fetch_dtd(root: str | Path) -> Path:
    """Download and unpack the Describable Textures Dataset below root."""
    root = Path(root)
    archive = download(DTD_URL, root / "dtd.tar.gz")
    extract_archive(archive, root)
    return root / "dtd"
