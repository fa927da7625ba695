"""End-to-end reproduction suites with pass/fail checks against tolerance bands."""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np
import torch

from .classifiers import (
    ClassifierConfig,
    IrmSchedule,
    train_baseline,
    train_cf_augmented,
    train_ensemble,
    train_gan_augmented,
    train_irm,
    train_iv_augmented,
)
from .const import (
    CAUSAL_ID_RHOS,
    COLORED,
    DOUBLE_COLORED,
    ENV_RHOS_2,
    ENV_RHOS_5,
    MAX_CF_RATIO,
    MNIST_TEST_SIZE,
    MNIST_TRAIN_SIZE,
    VARIANTS,
    WILDLIFE,
)
from .datasets import DigitSource, build_environments, build_variant, ingest_textures, load_mnist, synthetic_digits
from .evaluation import EvalReport, ablate_cf_count, causal_identification, evaluate, render_report
from .evaluation.report import write_csv
from .exceptions import InvalidArgumentError, MaskCollapseError, StageError
from .helpers import get_logger, torch_generator
from .losses import LossWeights, binary_entropy_loss
from .scm import LabelTriple, MechanismSet, forward_scm, sample_counterfactual_set, sample_noise
from .training import TrainConfig, train_cgan, train_cgn

_LOGGER = logging.getLogger(__name__)

SUITES = ("table2", "table6", "fig8", "collapse")
CHECKS_NAME = "checks.csv"

# Test-accuracy floors of the counterfactually augmented classifier.
CGN_FLOORS = {COLORED: 0.85, DOUBLE_COLORED: 0.75, WILDLIFE: 0.70}
BASELINE_TRAIN_FLOOR = 0.99
BASELINE_TEST_CEILING = 0.15
GAN_BASELINE_BAND = 0.05
SC_RANGE_CEILING = 0.01
BCC_RANGE_FLOOR = 0.05
SPEARMAN_FLOOR = 0.8
ABLATION_BASELINE_BAND = 0.05
# Training without the shape losses should fail in at least this share of seeds.
COLLAPSE_FAILURE_SHARE = 0.8
ENTROPY_FLOOR = 0.3
ENTROPY_SAMPLES = 256


@dataclass
class ReproProfile:
    """Problem sizes of a reproduction run."""

    n_train: int = MNIST_TRAIN_SIZE
    n_test: int = MNIST_TEST_SIZE
    cgn_steps: int = 30000
    clf_epochs: int = 5
    cf_count: int = 100_000
    ablation_counts: tuple = (10_000, 30_000, 100_000)
    synthetic: bool = False


PROFILES = {
    "full": ReproProfile(),
    "smoke": ReproProfile(
        n_train=2000,
        n_test=1000,
        cgn_steps=20,
        clf_epochs=1,
        cf_count=2000,
        ablation_counts=(500, 1000, 2000),
        synthetic=True,
    ),
}


class Check(NamedTuple):
    """One acceptance row; a nan observation prints as undefined."""

    name: str
    observed: float
    expected: str
    passed: bool

    @property
    def observed_text(self) -> str:
        return "undefined" if math.isnan(self.observed) else f"{self.observed:.4f}"

    def row(self) -> dict:
        return {**self._asdict(), "observed": self.observed_text}

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.observed_text} (expected {self.expected})"


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any failure inside the block with the stage name."""
    try:
        yield
    except StageError:
        raise
    except Exception as err:
        raise StageError(name, str(err)) from err


def mask_entropy(mechs: MechanismSet, seed: int, n: int = ENTROPY_SAMPLES) -> float:
    """Mean binary entropy (bits) of masks for random noise and random shape labels."""
    y = torch.randint(0, mechs.n_classes, (n,), generator=torch_generator(seed, "entropy-labels"))
    sample = forward_scm(mechs, sample_noise(mechs, n, seed, "entropy"), LabelTriple.uniform(y))
    return float(binary_entropy_loss(sample.m))


def ablation_ratios(variant: str) -> tuple[int, ...]:
    """Ratios swept per variant; colored MNIST allows at most 10."""
    return (1, 5, 10) if MAX_CF_RATIO[variant] <= 10 else (1, 10, 100)


class ReproSuite:
    """Runs one named suite over several seeds and checks the outcome."""

    def __init__(
        self,
        name: str,
        seeds: int,
        out_dir: str | Path,
        variants: Sequence[str] | None = None,
        profile: ReproProfile | None = None,
        data_root: str | Path = "./data",
        echo: Callable[[str], None] = print,
    ) -> None:
        if name not in SUITES:
            raise InvalidArgumentError(f"suite must be one of {SUITES}, got {name}")
        if seeds < 1:
            raise InvalidArgumentError("seeds must be >= 1")
        self.name = name
        self.seeds = list(range(seeds))
        self.out_dir = Path(out_dir)
        self.variants = list(variants or (VARIANTS if name in ("table2", "fig8") else (DOUBLE_COLORED,)))
        for variant in self.variants:
            if variant not in VARIANTS:
                raise InvalidArgumentError(f"unknown variant {variant}")
        self.profile = profile or PROFILES["full"]
        self.data_root = Path(data_root)
        self.echo = echo
        self._log = get_logger("pycgn")

    def _digits(self, seed: int) -> tuple[DigitSource, DigitSource]:
        p = self.profile
        if p.synthetic:
            return synthetic_digits(p.n_train, seed), synthetic_digits(p.n_test, seed + 10_000)
        root = self.data_root / "mnist"
        return load_mnist(root, True).take(p.n_train), load_mnist(root, False).take(p.n_test)

    def _data(self, variant: str, seed: int):
        with stage("dataset"):
            train_digits, test_digits = self._digits(seed)
            bank = ingest_textures(seed=seed) if variant == WILDLIFE else None
            train, test = build_variant(variant, seed, train_digits, test_digits, bank=bank)
        return train_digits, bank, train, test

    def _cgn(self, variant: str, seed: int, train):
        cfg = TrainConfig(variant=variant, steps=self.profile.cgn_steps, seed=seed)
        with stage("cgn"):
            return train_cgn(cfg, train).mechanisms

    def _clf_config(self, seed: int) -> ClassifierConfig:
        return ClassifierConfig(epochs=self.profile.clf_epochs, seed=seed)

    def run(self) -> list[Check]:
        """Execute the suite, render the report and print one line per check."""
        logger = self._log.getChild("Repro")
        logger.info("Running %s over %s seed(s) for %s", self.name, len(self.seeds), self.variants)
        report = EvalReport({"suite": self.name, "seeds": self.seeds, "variants": self.variants})
        checks = getattr(self, f"_run_{self.name}")(report)

        render_report(report, self.out_dir / "report")
        if checks:
            write_csv([c.row() for c in checks], self.out_dir / CHECKS_NAME)
        for check in checks:
            self.echo(check.line())
        return checks

    def _run_table2(self, report: EvalReport) -> list[Check]:
        checks = []
        for variant in self.variants:
            sub = EvalReport()
            for seed in self.seeds:
                digits, bank, train, test = self._data(variant, seed)
                cfg = self._clf_config(seed)
                mechs = self._cgn(variant, seed, train)
                with stage("cgan"):
                    cgan, _ = train_cgan(TrainConfig(variant=variant, steps=self.profile.cgn_steps, seed=seed), train)
                with stage("counterfactuals"):
                    n_noise = max(1, self.profile.cf_count // 10)
                    cf_set = sample_counterfactual_set(mechs, n_noise, 10, seed, variant)

                with stage("classifiers"):
                    runs = {
                        "original": train_baseline(train, cfg),
                        "original+gan": train_gan_augmented(train, cgan, self.profile.cf_count, cfg),
                        "original+cgn": train_cf_augmented(train, cf_set, config=cfg),
                        "original+cgn ensemble": train_ensemble(train, cf_set, cfg),
                        "original+iv": train_iv_augmented(train, mechs, len(cf_set), cfg),
                    }
                    for label, rhos in (("irm 2 envs", ENV_RHOS_2), ("irm 5 envs", ENV_RHOS_5)):
                        envs = build_environments(variant, rhos, seed, digits, bank=bank)
                        runs[label] = train_irm(envs, cfg, IrmSchedule(cfg.lambda_max, cfg.ramp_fraction))

                for method, run in runs.items():
                    heads = None
                    if len(run.model.head_roles) > 1:
                        heads = {role: evaluate(run.model, test, role) for role in run.model.head_roles}
                    for target in (report, sub):
                        target.add_method(f"{variant}/{method}", evaluate(run.model, train), evaluate(run.model, test), heads)

            checks += self._table2_checks(variant, sub)
        return checks

    def _table2_checks(self, variant: str, sub: EvalReport) -> list[Check]:
        def median(method: str, key: str = "test") -> float:
            return float(np.median(sub["methods"][f"{variant}/{method}"][key]))

        base, cgn = median("original"), median("original+cgn")
        checks = [
            Check(f"{variant} original+cgn test acc", cgn, f">= {CGN_FLOORS[variant]}", cgn >= CGN_FLOORS[variant])
        ]
        if variant != COLORED:
            train = median("original", "train")
            irm5, irm2, gan = median("irm 5 envs"), median("irm 2 envs"), median("original+gan")
            checks += [
                Check(f"{variant} original train acc", train, f">= {BASELINE_TRAIN_FLOOR}", train >= BASELINE_TRAIN_FLOOR),
                Check(f"{variant} original test acc", base, f"<= {BASELINE_TEST_CEILING}", base <= BASELINE_TEST_CEILING),
                Check(f"{variant} cgn > irm 5 envs", cgn - irm5, "> 0", cgn > irm5),
                Check(f"{variant} irm 5 envs > irm 2 envs", irm5 - irm2, "> 0", irm5 > irm2),
                Check(f"{variant} irm 2 envs >= original", irm2 - base, ">= 0", irm2 >= base),
                Check(f"{variant} |gan - original|", abs(gan - base), f"<= {GAN_BASELINE_BAND}", abs(gan - base) <= GAN_BASELINE_BAND),
            ]
        return checks

    def _run_table6(self, report: EvalReport) -> list[Check]:
        checks = []
        for variant in self.variants:
            results = []
            for seed in self.seeds:
                digits, bank, train, _ = self._data(variant, seed)
                mechs = self._cgn(variant, seed, train)
                with stage("causal-id"):
                    envs = build_environments(variant, CAUSAL_ID_RHOS, seed, digits, bank=bank)
                    result = causal_identification(
                        mechs, envs, max(1, self.profile.cf_count // 10), 10, self._clf_config(seed)
                    )
                report.add_causal(result)
                results.append(result)

            sc = float(np.median([r.ranges["SC"] for r in results]))
            checks.append(Check(f"{variant} SC range", sc, f"< {SC_RANGE_CEILING}", sc < SC_RANGE_CEILING))
            if variant != COLORED:
                bcc = float(np.median([r.ranges["BCC"] for r in results]))
                checks.append(Check(f"{variant} BCC range", bcc, f"> {BCC_RANGE_FLOOR}", bcc > BCC_RANGE_FLOOR))
            shape_wins = sum(r.causal == "SC" for r in results)
            checks.append(
                Check(f"{variant} shape identified", shape_wins, f"{len(results)}/{len(results)} seeds", shape_wins == len(results))
            )
        return checks

    def _run_fig8(self, report: EvalReport) -> list[Check]:
        logger = self._log.getChild("Fig8")
        checks = []
        for variant in self.variants:
            # The sweep itself repeats over seeds; data and generator come from the first.
            seed = self.seeds[0]
            _, _, train, test = self._data(variant, seed)
            mechs = self._cgn(variant, seed, train)
            cfg = self._clf_config(seed)
            with stage("ablation"):
                base = float(np.median([evaluate(train_baseline(train, replace(cfg, seed=s)).model, test) for s in self.seeds]))
                result = ablate_cf_count(
                    mechs, train, test, self.profile.ablation_counts, ablation_ratios(variant), self.seeds, cfg
                )
            report.add_ablation(result)

            ratio = max(result.curves)
            rho = result.spearman[ratio]
            low = result.curves[ratio][min(result.curves[ratio])]
            name = f"{variant} spearman(count, acc) ratio {ratio}"
            if math.isnan(rho):
                logger.warning("Spearman undefined for %s ratio %s: the median curve is constant", variant, ratio)
                name += " undefined (constant curve)"
            checks += [
                Check(name, rho, f"> {SPEARMAN_FLOOR}", rho > SPEARMAN_FLOOR),
                Check(
                    f"{variant} smallest count vs original",
                    abs(low - base),
                    f"<= {ABLATION_BASELINE_BAND}",
                    abs(low - base) <= ABLATION_BASELINE_BAND,
                ),
            ]
        return checks

    def _run_collapse(self, report: EvalReport) -> list[Check]:
        logger = self._log.getChild("Collapse")
        checks = []
        for variant in self.variants:
            rows = []
            for seed in self.seeds:
                _, _, train, _ = self._data(variant, seed)
                weights = LossWeights(lambda_binary=0.0, lambda_mask=0.0)
                cfg = TrainConfig(variant=variant, steps=self.profile.cgn_steps, seed=seed, weights=weights)
                with stage("cgn"):
                    try:
                        mechs = train_cgn(cfg, train).mechanisms
                    except MaskCollapseError as err:
                        rows.append({"seed": seed, "collapsed": True, "state": err.state, "entropy": None})
                        continue
                    entropy = mask_entropy(mechs, seed)
                rows.append({"seed": seed, "collapsed": False, "state": "ok", "entropy": entropy})
                logger.info("seed %s: mask entropy %.3f bits without shape losses", seed, entropy)

            report.setdefault("collapse", {})[variant] = rows
            failed = sum(row["collapsed"] or row["entropy"] > ENTROPY_FLOOR for row in rows)
            share = failed / len(rows)
            checks.append(
                Check(
                    f"{variant} collapsed or entropy > {ENTROPY_FLOOR} without shape losses",
                    share,
                    f">= {COLLAPSE_FAILURE_SHARE}",
                    share >= COLLAPSE_FAILURE_SHARE,
                )
            )
        return checks


def repro_suite(
    name: str,
    seeds: int,
    out_dir: str | Path,
    variants: Sequence[str] | None = None,
    profile: str = "full",
    data_root: str | Path = "./data",
    echo: Callable[[str], None] = print,
) -> list[Check]:
    """Run one of SUITES and return the checks.

    Raises:
        InvalidArgumentError: Unknown suite or profile, or seeds < 1.
        StageError: A pipeline stage failed.
    """
    if profile not in PROFILES:
        raise InvalidArgumentError(f"profile must be one of {sorted(PROFILES)}")
    return ReproSuite(name, seeds, out_dir, variants, PROFILES[profile], data_root, echo).run()
