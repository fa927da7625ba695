"""Tests for the classifier lab."""

import math

import pytest
import torch
import torch.nn.functional as F

from pycgn.classifiers import (
    Backbone,
    ClassifierConfig,
    ClassifierModel,
    IrmSchedule,
    MixBatchSpec,
    ensemble_log_probs,
    head_losses,
    irm_penalty,
    load_classifier,
    save_classifier,
    train_baseline,
    train_cf_augmented,
    train_ensemble,
    train_factor_classifier,
    train_irm,
)
from pycgn.const import DOUBLE_COLORED, HEAD_BG, HEAD_FG, HEAD_ROLES, HEAD_SHAPE
from pycgn.datasets import build_environments
from pycgn.exceptions import CorruptCheckpointError, InvalidArgumentError
from pycgn.scm import CounterfactualSet, sample_counterfactual_set

TINY = ClassifierConfig(epochs=1, batch_size=16)


def test_ensemble_is_normalized_geometric_mean():
    gen = torch.Generator().manual_seed(0)
    heads = [F.log_softmax(torch.randn(4, 10, generator=gen), dim=-1) for _ in range(3)]
    out = ensemble_log_probs(heads)

    geo = torch.exp(torch.stack(heads).mean(0))
    assert torch.allclose(out.exp(), geo / geo.sum(-1, keepdim=True), atol=1e-6)
    assert torch.allclose(out.exp().sum(-1), torch.ones(4), atol=1e-6)


def test_ensemble_of_identical_heads_is_that_head():
    head = F.log_softmax(torch.randn(5, 10), dim=-1)
    assert torch.allclose(ensemble_log_probs([head, head, head]), head, atol=1e-6)


def test_check_head():
    single = ClassifierModel()
    triple = ClassifierModel(HEAD_ROLES)
    assert single.check_head(None) == HEAD_SHAPE
    assert triple.check_head(None) == "ensemble"
    assert triple.check_head(HEAD_FG) == HEAD_FG
    with pytest.raises(InvalidArgumentError):
        single.check_head(HEAD_BG)
    with pytest.raises(InvalidArgumentError):
        ClassifierModel((HEAD_SHAPE, HEAD_SHAPE))


def test_head_losses_use_their_own_column():
    logits = {role: torch.zeros(2, 10) for role in HEAD_ROLES}
    logits[HEAD_FG][:, 3] = 10.0
    labels = torch.tensor([[0, 3, 9], [1, 3, 8]])
    losses = head_losses(logits, labels, MixBatchSpec.triple().head_labels)
    assert losses[HEAD_FG].item() < 1e-3
    assert losses[HEAD_SHAPE].item() == pytest.approx(math.log(10), abs=1e-5)
    assert losses[HEAD_BG].item() == pytest.approx(math.log(10), abs=1e-5)


def test_mix_batch_split_sums_to_batch():
    assert MixBatchSpec(real_fraction=0.5).split(33) == (16, 17)
    assert MixBatchSpec(real_fraction=0.0).split(8) == (0, 8)
    with pytest.raises(InvalidArgumentError):
        MixBatchSpec(real_fraction=1.5).validate()


def test_irm_penalty_is_zero_for_zero_logits():
    logits = [torch.zeros(6, 10, requires_grad=True) for _ in range(2)]
    labels = [torch.arange(6), torch.arange(6)]
    assert irm_penalty(logits, labels).item() == pytest.approx(0.0, abs=1e-12)


def test_irm_penalty_properties():
    gen = torch.Generator().manual_seed(1)
    logits = [torch.randn(8, 10, generator=gen, requires_grad=True) for _ in range(3)]
    labels = [torch.randint(0, 10, (8,), generator=gen) for _ in range(3)]
    forward = irm_penalty(logits, labels)
    assert forward.item() > 0
    reverse = irm_penalty(logits[::-1], labels[::-1])
    assert forward.item() == pytest.approx(reverse.item(), rel=1e-6)
    forward.backward()
    assert logits[0].grad is not None

    with pytest.raises(InvalidArgumentError):
        irm_penalty(logits[:1], labels[:1])


def test_irm_schedule_ramps_then_holds():
    schedule = IrmSchedule(lambda_max=10.0, ramp_fraction=0.5)
    assert schedule.weight(0, 100) == 0.0
    assert schedule.weight(25, 100) == pytest.approx(5.0)
    assert schedule.weight(50, 100) == pytest.approx(10.0)
    assert schedule.weight(99, 100) == pytest.approx(10.0)
    assert IrmSchedule(lambda_max=0.0).weight(10, 100) == 0.0


def test_all_methods_share_the_backbone():
    counts = {ClassifierModel(roles).backbone_parameter_count() for roles in ((HEAD_SHAPE,), HEAD_ROLES, (HEAD_FG,))}
    assert len(counts) == 1
    assert counts.pop() == sum(p.numel() for p in Backbone().parameters())


def test_baseline_training(double_colored, tmp_path):
    train, test = double_colored
    run = train_baseline(train, TINY, test=test, out_dir=tmp_path)
    assert len(run.metrics) == 1
    row = run.metrics.rows[0]
    assert 0.0 <= row["train_acc"] <= 1.0
    assert 0.0 <= row["test_acc"] <= 1.0
    assert (tmp_path / "metrics.csv").exists()


def test_empty_counterfactual_set_reduces_to_baseline(double_colored):
    train, _ = double_colored
    baseline = train_baseline(train, TINY).model
    augmented = train_cf_augmented(train, CounterfactualSet.empty(32), config=TINY).model
    for a, b in zip(baseline.state_dict().values(), augmented.state_dict().values()):
        assert torch.equal(a, b)


def test_ensemble_training_reports_every_head(double_colored, mechs):
    train, test = double_colored
    cf_set = sample_counterfactual_set(mechs, 8, 4, seed=0, variant=DOUBLE_COLORED)
    run = train_ensemble(train, cf_set, TINY, test=test)
    assert run.model.head_roles == HEAD_ROLES
    assert set(run.metrics.columns) >= {f"acc_{role}" for role in HEAD_ROLES}


def test_factor_classifier_trains_on_counterfactuals_only(mechs):
    cf_set = sample_counterfactual_set(mechs, 8, 3, seed=0)
    run = train_factor_classifier(cf_set, HEAD_FG, ClassifierConfig(epochs=1, batch_size=8))
    assert run.model.head_roles == (HEAD_FG,)
    assert len(run.metrics) == 1


def test_irm_training(digits, double_colored):
    envs = build_environments(DOUBLE_COLORED, (0.9, 1.0), 0, digits)
    run = train_irm(envs, ClassifierConfig(epochs=1, batch_size=16, lambda_max=5.0), test=double_colored[1])
    assert {"penalty", "penalty_weight"} <= set(run.metrics.columns)
    assert run.metrics.rows[0]["penalty_weight"] == pytest.approx(5.0)

    with pytest.raises(InvalidArgumentError):
        train_irm(envs[:1], TINY)


def test_classifier_save_and_load(tmp_path):
    torch.manual_seed(0)
    model = ClassifierModel(HEAD_ROLES).eval()
    save_classifier(model, tmp_path, method="ensemble")
    loaded = load_classifier(tmp_path)
    x = torch.rand(3, 3, 32, 32)
    assert torch.equal(model.log_probs(x), loaded.log_probs(x))

    with open(tmp_path / "model.pt", "ab") as handle:
        handle.write(b"\0")
    with pytest.raises(CorruptCheckpointError):
        load_classifier(tmp_path)
