"""Tests for the command line interface."""

import json
import logging

import pytest

from pycgn import cli
from pycgn.cli import build_parser, exit_code, run
from pycgn.const import (
    EXIT_CHECKS_FAILED,
    EXIT_COLLAPSE,
    EXIT_FETCH_REQUIRED,
    EXIT_NUMERIC,
    EXIT_STAGE_FAILURE,
    EXIT_USAGE,
)
from pycgn.exceptions import (
    ConfigError,
    FetchRequiredError,
    MaskCollapseError,
    NumericFailureError,
    OutputExistsError,
    StageError,
)
from pycgn.repro import Check
from pycgn.scm import CounterfactualSet


@pytest.mark.parametrize("argv", [["--help"], ["cgn", "train", "--help"], ["repro", "--help"]])
def test_help_exits_cleanly(argv):
    assert run(argv) == 0


def test_unknown_flag_is_a_usage_error():
    assert run(["dataset", "build", "--variant", "colored", "--out", "x", "--bogus"]) == EXIT_USAGE


def test_tau_above_half_is_a_usage_error(tmp_path, caplog):
    with caplog.at_level(logging.ERROR, logger="pycgn"):
        code = run(["cgn", "train", "--dataset", str(tmp_path), "--tau", "0.6", "--out", str(tmp_path / "run")])
    assert code == EXIT_USAGE
    assert "1 - tau" in caplog.text
    assert not (tmp_path / "run").exists()


def test_repro_needs_a_positive_seed_count(tmp_path):
    assert run(["repro", "table2", "--seeds", "0", "--out", str(tmp_path / "r")]) == EXIT_USAGE


def test_missing_dataset_requires_fetch(tmp_path):
    code = run(["cgn", "train", "--dataset", str(tmp_path / "none"), "--steps", "1", "--out", str(tmp_path / "run")])
    assert code == EXIT_FETCH_REQUIRED
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["status"] == "failed"


def test_exit_code_mapping():
    assert exit_code(ConfigError("x")) == EXIT_USAGE
    assert exit_code(OutputExistsError("x")) == EXIT_USAGE
    assert exit_code(MaskCollapseError("x", "collapsed_to_bg", 10)) == EXIT_COLLAPSE
    assert exit_code(NumericFailureError("x", 3, {})) == EXIT_NUMERIC
    assert exit_code(FetchRequiredError("x")) == EXIT_FETCH_REQUIRED
    assert exit_code(RuntimeError("x")) == EXIT_STAGE_FAILURE


def test_stage_errors_map_through_their_cause():
    try:
        try:
            raise NumericFailureError("nan", 1, {})
        except NumericFailureError as err:
            raise StageError("train", str(err)) from err
    except StageError as err:
        assert exit_code(err) == EXIT_NUMERIC
    assert exit_code(StageError("train", "boom")) == EXIT_STAGE_FAILURE


def test_parser_defaults():
    args = build_parser().parse_args(["repro", "fig8", "--out", "x"])
    assert args.seeds == 5
    assert args.profile == "full"
    assert args.seed is None


def _build(tmp_path, *extra):
    return run(
        ["dataset", "build", "--variant", "double_colored", "--synthetic", "200", "--sigma", "0",
         "--rho", "0.9", "--rho", "1.0", "--out", str(tmp_path / "data"), *extra]
    )


def test_dataset_build(tmp_path):
    assert _build(tmp_path) == 0
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert set(manifest["splits"]) == {"train", "test", "env0", "env1"}

    assert _build(tmp_path) == EXIT_USAGE
    assert _build(tmp_path, "--overwrite") == 0


def test_train_then_sample(tmp_path):
    assert _build(tmp_path) == 0
    data = str(tmp_path / "data")
    cgn = tmp_path / "cgn"
    assert run(["cgn", "train", "--dataset", data, "--steps", "2", "--batch-size", "16", "--out", str(cgn)]) == 0
    assert (cgn / "checkpoint" / "checkpoint.json").exists()
    assert json.loads((cgn / "manifest.json").read_text())["status"] == "ok"

    out = tmp_path / "cf"
    code = run(["cgn", "sample", "--ckpt", str(cgn), "--n-noise", "5", "--cf-ratio", "2", "--out", str(out)])
    assert code == 0
    assert len(CounterfactualSet.load(out / "cf_set.npz")) == 10
    assert (out / "samples.png").exists()


def _clf_train(tmp_path, variant, out="clf"):
    return run(
        ["clf", "train", "--method", "baseline", "--variant", variant, "--dataset", str(tmp_path / "data"),
         "--epochs", "1", "--batch-size", "16", "--out", str(tmp_path / out)]
    )


def test_clf_train_checks_the_variant(tmp_path):
    assert _build(tmp_path) == 0
    assert _clf_train(tmp_path, "colored", out="wrong") == EXIT_USAGE
    assert json.loads((tmp_path / "wrong" / "manifest.json").read_text())["status"] == "failed"

    assert _clf_train(tmp_path, "double_colored") == 0
    assert (tmp_path / "clf" / "model" / "classifier.json").exists()


@pytest.mark.parametrize("passed, expected", [(True, 0), (False, EXIT_CHECKS_FAILED)])
def test_repro_exit_code_follows_the_checks(tmp_path, monkeypatch, passed, expected):
    monkeypatch.setattr(cli, "repro_suite", lambda *args: [Check("cgn test", 0.5, ">= 0.75", passed)])
    out = tmp_path / "repro"
    assert run(["repro", "table2", "--seeds", "1", "--profile", "smoke", "--out", str(out)]) == expected
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == ("ok" if passed else "checks_failed")
    assert manifest["failed"] == ([] if passed else ["cgn test"])
