"""Shared fixtures: offline digits, tiny datasets and untrained mechanisms."""

from __future__ import annotations

import pytest
import torch

from pycgn.const import COLORED, DOUBLE_COLORED
from pycgn.datasets import build_variant, synthetic_digits
from pycgn.scm import MechanismSet

TINY_NOISE = 8


@pytest.fixture(scope="session")
def digits():
    return synthetic_digits(200, 0)


@pytest.fixture(scope="session")
def test_digits():
    return synthetic_digits(100, 1)


@pytest.fixture(scope="session")
def double_colored(digits, test_digits):
    """(train, test) of double-colored MNIST without colour noise."""
    return build_variant(DOUBLE_COLORED, 0, digits, test_digits, sigma=0.0)


@pytest.fixture(scope="session")
def colored(digits, test_digits):
    return build_variant(COLORED, 0, digits, test_digits, sigma=0.0)


@pytest.fixture
def mechs():
    torch.manual_seed(0)
    return MechanismSet(noise_dim=TINY_NOISE).eval()
