"""Structural causal model: mechanisms, composer and samplers."""

from __future__ import annotations

from .layers import PatchShuffle, compose, patch_shuffle, shuffle_tiles
from .mechanisms import (
    ConditionalGenerator,
    MechanismSet,
    MonolithicGenerator,
    ShapeMechanism,
    TextureMechanism,
    architecture_hash,
)
from .sampling import (
    CounterfactualSet,
    LabelTriple,
    ScmSample,
    draw_label_triples,
    forward_scm,
    interpolate,
    sample_counterfactual_set,
    sample_noise,
)

__all__ = [
    ConditionalGenerator,
    CounterfactualSet,
    LabelTriple,
    MechanismSet,
    MonolithicGenerator,
    PatchShuffle,
    ScmSample,
    ShapeMechanism,
    TextureMechanism,
    architecture_hash,
    compose,
    draw_label_triples,
    forward_scm,
    interpolate,
    patch_shuffle,
    sample_counterfactual_set,
    sample_noise,
    shuffle_tiles,
]
