"""Tests for metrics, causal identification, ablations and reports."""

import math
import warnings

import numpy as np
import pytest
import torch
from PIL import Image

from pycgn.classifiers import ClassifierConfig, ClassifierModel
from pycgn.const import COLORED, DOUBLE_COLORED
from pycgn.datasets import BG_PALETTE, FG_PALETTE, build_environments
from pycgn.evaluation import (
    AblationResult,
    EvalReport,
    ablate_cf_count,
    causal_identification,
    cf_grid_samples,
    evaluate,
    identify_stable_signal,
    median_curves,
    monotonicity,
    palette_agreement,
    render_report,
    seed_stats,
)
from pycgn.exceptions import InvalidArgumentError


class ConstantModel(ClassifierModel):
    """Always predicts one class."""

    def __init__(self, label):
        super().__init__()
        self.label = label

    def forward(self, x):
        logits = torch.zeros(len(x), 10)
        logits[:, self.label] = 1.0
        return {"shape": logits}


def test_evaluate_against_class_labels(double_colored):
    _, test = double_colored
    expected = float((test.class_labels == 3).mean())
    assert evaluate(ConstantModel(3), test) == pytest.approx(expected)
    with pytest.raises(InvalidArgumentError):
        evaluate(ConstantModel(3), test, head="bg_factor")


def test_identify_stable_signal():
    table = {"SC": [0.9, 0.91, 0.9], "OCC": [0.2, 0.5, 0.9], "BCC": [0.1, 0.6, 0.95]}
    result = identify_stable_signal(table, [0.5, 0.9, 1.0])
    assert result.causal == "SC"
    assert result.ranking == ["SC", "OCC", "BCC"]
    assert result.ranges["OCC"] == pytest.approx(0.7)


def test_identify_stable_signal_reports_ties():
    result = identify_stable_signal({"SC": [0.5, 0.6], "OCC": [0.7, 0.8]}, [0.9, 1.0])
    assert result.causal is None
    assert set(result.stable) == {"SC", "OCC"}


def test_identify_stable_signal_ignores_environment_order():
    table = {"SC": [0.9, 0.8, 0.85], "OCC": [0.1, 0.9, 0.5]}
    reordered = {name: accs[::-1] for name, accs in table.items()}
    assert identify_stable_signal(table, [1, 2, 3]).ranges == identify_stable_signal(reordered, [3, 2, 1]).ranges


def test_seed_stats():
    stats = seed_stats([0.1, 0.3, 0.2])
    assert stats["n"] == 3
    assert stats["median"] == pytest.approx(0.2)
    assert stats["min"] == pytest.approx(0.1)
    assert stats["std"] == pytest.approx(0.1)
    assert seed_stats([0.4])["std"] == 0.0
    assert seed_stats([]) == {"n": 0}


def test_palette_agreement_on_exact_colours():
    labels = torch.arange(10)
    images = torch.from_numpy(BG_PALETTE).float()[:, :, None, None].repeat(1, 1, 32, 32)
    images[:, :, 10:20, 12:18] = torch.from_numpy(FG_PALETTE).float()[:, :, None, None]
    assert palette_agreement(images, labels, DOUBLE_COLORED) == {"fg": 1.0, "bg": 1.0}
    assert set(palette_agreement(images, labels, COLORED)) == {"fg"}


def test_monotonicity():
    assert monotonicity({100: 0.2, 1000: 0.4, 10000: 0.7}) == pytest.approx(1.0)
    assert monotonicity({100: 0.7, 1000: 0.4, 10000: 0.2}) == pytest.approx(-1.0)
    assert math.isnan(monotonicity({100: 0.5}))


def test_monotonicity_of_a_constant_curve_is_undefined():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert math.isnan(monotonicity({100: 0.5, 1000: 0.5, 10000: 0.5}))


def test_median_curves():
    rows = [
        {"count": 10, "cf_ratio": 1, "seed": s, "test_acc": acc}
        for s, acc in enumerate((0.2, 0.4, 0.9))
    ] + [{"count": 20, "cf_ratio": 1, "seed": 0, "test_acc": 0.5}]
    assert median_curves(rows) == {1: {10: 0.4, 20: 0.5}}


def test_ablation_rejects_bad_grids(mechs, double_colored):
    train, test = double_colored
    with pytest.raises(InvalidArgumentError):
        ablate_cf_count(mechs, train, test, [10], [1001], [0])
    with pytest.raises(InvalidArgumentError):
        ablate_cf_count(mechs, train, test, [], [1], [0])


def test_tiny_ablation(mechs, double_colored):
    train, test = double_colored
    result = ablate_cf_count(mechs, train, test, [8, 16], [2], [0], ClassifierConfig(epochs=1, batch_size=16))
    assert len(result.rows) == 2
    assert set(result.curves[2]) == {8, 16}
    assert -1.0 <= result.spearman[2] <= 1.0


def test_causal_identification_needs_two_environments(mechs, digits):
    envs = build_environments(DOUBLE_COLORED, (0.9,), 0, digits)
    with pytest.raises(InvalidArgumentError):
        causal_identification(mechs, envs, n_noise=4)


def test_report_rejects_out_of_range_accuracy():
    report = EvalReport()
    report.add_method("baseline", 1.2, 0.1)
    with pytest.raises(InvalidArgumentError):
        report.validate()


def _report():
    report = EvalReport()
    for seed in range(3):
        report.add_method("baseline", 1.0, 0.1 + 0.01 * seed)
        report.add_method("original+cgn", 0.95, 0.8 + 0.01 * seed)
        report.add_causal(identify_stable_signal({"SC": [0.9, 0.9], "OCC": [0.5, 0.9]}, [0.9, 1.0]))
    rows = [{"count": c, "cf_ratio": 1, "seed": 0, "test_acc": a} for c, a in ((10, 0.2), (100, 0.5))]
    report.add_ablation(AblationResult(DOUBLE_COLORED, rows, median_curves(rows), {1: 1.0}))
    return report


def test_render_is_deterministic(tmp_path):
    first = render_report(_report(), tmp_path / "a")
    second = render_report(_report(), tmp_path / "b")
    names = sorted(p.name for p in first)
    assert names == sorted(p.name for p in second)
    assert "cf_grid.png" not in names
    for path in first:
        if path.suffix == ".csv":
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()
    assert (tmp_path / "a" / "ablation_double_colored.png").exists()


def test_render_skips_grid_without_samples(tmp_path):
    render_report(_report(), tmp_path, samples=torch.zeros(0, 3, 32, 32))
    assert not (tmp_path / "cf_grid.png").exists()


def test_counterfactual_grid(mechs, tmp_path):
    samples = cf_grid_samples(mechs, 0, DOUBLE_COLORED)
    assert samples.shape == (100, 3, 32, 32)
    render_report(EvalReport(), tmp_path, samples=samples)
    with Image.open(tmp_path / "cf_grid.png") as img:
        assert img.size == (342, 342)


def test_table6_counts_stable_seeds():
    rows = _report().table6_rows()
    sc = next(row for row in rows if row["signal"] == "SC")
    assert sc["stable_in_seeds"] == 3
    assert sc["range_mean"] == pytest.approx(0.0)
    assert np.isclose(next(row for row in rows if row["signal"] == "OCC")["range_mean"], 0.4)
