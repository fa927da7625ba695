"""Tests for the reproduction suite plumbing."""

import pytest

from pycgn.const import COLORED, DOUBLE_COLORED, VARIANTS, WILDLIFE
from pycgn.exceptions import InvalidArgumentError, StageError
from pycgn.repro import PROFILES, Check, ReproSuite, ablation_ratios, mask_entropy, stage


def test_suite_arguments_are_validated(tmp_path):
    with pytest.raises(InvalidArgumentError):
        ReproSuite("table3", 1, tmp_path)
    with pytest.raises(InvalidArgumentError):
        ReproSuite("table2", 0, tmp_path)
    with pytest.raises(InvalidArgumentError):
        ReproSuite("table2", 1, tmp_path, variants=["cifar"])


def test_suite_default_variants(tmp_path):
    assert ReproSuite("table2", 2, tmp_path).variants == list(VARIANTS)
    assert ReproSuite("table6", 2, tmp_path).variants == [DOUBLE_COLORED]
    assert ReproSuite("fig8", 3, tmp_path).seeds == [0, 1, 2]


def test_check_line():
    assert Check("baseline test", 0.1, "<= 0.15", True).line() == "PASS  baseline test: 0.1000 (expected <= 0.15)"
    assert Check("cgn test", 0.5, ">= 0.75", False).line().startswith("FAIL")


def test_nan_check_is_reported_as_undefined():
    check = Check("spearman undefined (constant curve)", float("nan"), "> 0.8", False)
    assert check.line() == "FAIL  spearman undefined (constant curve): undefined (expected > 0.8)"
    assert check.row()["observed"] == "undefined"
    assert Check("x", 0.25, "> 0", True).row()["observed"] == "0.2500"


def test_stage_keeps_the_cause():
    with pytest.raises(StageError) as info:
        with stage("train"):
            raise ValueError("boom")
    assert info.value.stage == "train"
    assert isinstance(info.value.__cause__, ValueError)


def test_stage_passes_stage_errors_through():
    inner = StageError("inner", "x")
    with pytest.raises(StageError) as info:
        with stage("outer"):
            raise inner
    assert info.value is inner


def test_ablation_ratios():
    assert ablation_ratios(COLORED) == (1, 5, 10)
    assert ablation_ratios(DOUBLE_COLORED) == (1, 10, 100)
    assert ablation_ratios(WILDLIFE) == (1, 10, 100)


def test_smoke_profile_is_small():
    smoke = PROFILES["smoke"]
    assert smoke.synthetic
    assert smoke.cgn_steps < PROFILES["full"].cgn_steps


def test_collapse_suite_defaults_to_double_colored(tmp_path):
    assert ReproSuite("collapse", 5, tmp_path).variants == [DOUBLE_COLORED]


def test_mask_entropy_is_in_bits(mechs):
    assert 0.0 <= mask_entropy(mechs, 0, n=8) <= 1.0
