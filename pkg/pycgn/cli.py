"""Command line entry point: pycgn {dataset,cgn,clf,eval,report,repro}."""

from __future__ import annotations

import argparse
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import torch

from .classifiers import (
    ClassifierConfig,
    IrmSchedule,
    load_classifier,
    save_classifier,
    train_baseline,
    train_cf_augmented,
    train_ensemble,
    train_gan_augmented,
    train_irm,
    train_iv_augmented,
)
from .const import (
    CAUSAL_ID_RHOS,
    DATA_ROOT_ENV,
    DEFAULT_CF_COUNT,
    DEFAULT_CF_RATIO,
    DEFAULT_DATA_ROOT,
    DEFAULT_SIGMA,
    DTD,
    EXIT_CHECKS_FAILED,
    EXIT_COLLAPSE,
    EXIT_FETCH_REQUIRED,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_STAGE_FAILURE,
    EXIT_USAGE,
    HEAD_ROLES,
    MANIFEST_NAME,
    MODES,
    NUM_CLASSES,
    PROCEDURAL,
    VARIANTS,
    WILDLIFE,
)
from .datasets import (
    build_environments,
    build_variant,
    fetch_dtd,
    fetch_mnist,
    ingest_textures,
    list_environments,
    load_dataset,
    load_mnist,
    save_datasets,
    synthetic_digits,
)
from .evaluation import EvalReport, ablate_cf_count, causal_identification, cf_grid_samples, evaluate, render_report
from .exceptions import (
    ConfigError,
    FetchRequiredError,
    InvalidArgumentError,
    MaskCollapseError,
    NumericFailureError,
    OutputExistsError,
    StageError,
)
from .helpers import attach_run_log, get_logger
from .repro import PROFILES, SUITES, repro_suite
from .scm import CounterfactualSet, LabelTriple, sample_counterfactual_set, sample_noise
from .scm import interpolate as interpolate_scm
from .training import RunManifest, TrainConfig, load_checkpoint, read_yaml, train_cgan, train_cgn
from .training.config import from_dict
from .utils import Record, save_image_grid

_LOGGER = logging.getLogger(__name__)

METHODS = ("baseline", "gan", "cgn", "ensemble", "irm", "iv")
GRID_PREVIEW = 100


@dataclass
class ExperimentConfig:
    """Resolved parameters of one invocation, stored in its RunManifest."""

    command: str = ""
    out: str | None = None
    seed: int = 0
    data_root: str = DEFAULT_DATA_ROOT
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "ExperimentConfig":
        return from_dict(cls, data)

    @classmethod
    def from_args(cls, args: argparse.Namespace, **resolved: Any) -> "ExperimentConfig":
        """Snapshot every parsed flag plus values resolved from config files."""
        skip = {"command", "action", "func", "out", "seed", "seed_given", "data_root", "verbose", "overwrite"}
        params = {key: _plain(value) for key, value in vars(args).items() if key not in skip}
        params.update({key: _plain(value) for key, value in resolved.items()})
        return cls(
            command=f"{args.command} {getattr(args, 'action', '') or ''}".strip(),
            out=str(args.out) if getattr(args, "out", None) else None,
            seed=getattr(args, "seed", 0) or 0,
            data_root=str(args.data_root),
            params=params,
        )


def _plain(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def data_root(value: str | None) -> Path:
    """Flag > PYCGN_DATA_ROOT > ./data."""
    return Path(value or os.environ.get(DATA_ROOT_ENV) or DEFAULT_DATA_ROOT)


def prepare_out(out: str | Path, overwrite: bool) -> Path:
    """Create an output directory, refusing to reuse a non-empty one.

    Raises:
        OutputExistsError: out exists, is non-empty and overwrite is False.
    """
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not overwrite:
        raise OutputExistsError(f"{out} already exists; pass --overwrite to replace its contents")
    out.mkdir(parents=True, exist_ok=True)
    return out


def start_run(args: argparse.Namespace, **resolved: Any) -> RunManifest:
    """Prepare the output directory and persist the manifest before any compute."""
    out = prepare_out(args.out, args.overwrite)
    attach_run_log(logging.getLogger("pycgn"), out)
    experiment = ExperimentConfig.from_args(args, **resolved)
    return RunManifest.start(out, experiment.command, experiment.to_dict())


def checkpoint_dir(path: str | Path) -> Path:
    """Accept either a checkpoint directory or the run directory holding one."""
    path = Path(path)
    if (path / "checkpoint" / "checkpoint.json").exists():
        return path / "checkpoint"
    return path


def _digits(args: argparse.Namespace):
    if args.synthetic:
        return synthetic_digits(args.synthetic, args.seed), synthetic_digits(max(1, args.synthetic // 5), args.seed + 1)
    root = args.data_root / "mnist"
    return load_mnist(root, True), load_mnist(root, False)


def _texture_bank(args: argparse.Namespace, variant: str):
    if variant != WILDLIFE:
        return None
    if args.textures == DTD:
        return ingest_textures(DTD, args.seed, args.data_root / "dtd")
    return ingest_textures(PROCEDURAL, args.seed)


def _resolve(cls, args: argparse.Namespace, keys: Sequence[str], nested: dict[str, Any] | None = None):
    """Built-in defaults < --config file < flags; the resolved seed is written back to args."""
    data = read_yaml(args.config) if args.config else {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.seed_given:
        data["seed"] = args.seed
    for section, values in (nested or {}).items():
        data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
    try:
        config = cls.from_dict(data).validate()
    except InvalidArgumentError as err:
        raise ConfigError(str(err)) from err
    args.seed = config.seed
    return config


def _train_config(args: argparse.Namespace) -> TrainConfig:
    keys = ("variant", "mode", "steps", "batch_size", "device")
    return _resolve(TrainConfig, args, keys, {"weights": {"tau": args.tau}})


def _classifier_config(args: argparse.Namespace) -> ClassifierConfig:
    return _resolve(ClassifierConfig, args, ("epochs", "batch_size", "device"))


# dataset


def cmd_dataset_fetch(args: argparse.Namespace) -> int:
    root = args.data_root
    if args.what in ("mnist", "all"):
        fetch_mnist(root / "mnist")
    if args.what in ("dtd", "all"):
        fetch_dtd(root)
    print(f"Fetched {args.what} into {root}")
    return EXIT_OK


def cmd_dataset_build(args: argparse.Namespace) -> int:
    if args.sigma < 0:
        raise InvalidArgumentError(f"sigma must be >= 0, got {args.sigma}")
    start_run(args)
    train_digits, test_digits = _digits(args)
    bank = _texture_bank(args, args.variant)
    datasets = list(build_variant(args.variant, args.seed, train_digits, test_digits, args.sigma, bank))
    if args.rho:
        datasets += build_environments(args.variant, args.rho, args.seed, train_digits, args.sigma, bank)

    # The dataset sidecar and the run manifest share manifest.json.
    stored = save_datasets(datasets, args.out)
    stored["status"] = "ok"
    if bank is not None:
        stored["textures"] = bank.checksums()
    stored.save(Path(args.out) / MANIFEST_NAME)
    print(f"Wrote {len(datasets)} split(s) to {args.out}")
    return EXIT_OK


# cgn


def cmd_cgn_train(args: argparse.Namespace) -> int:
    config = _train_config(args)
    manifest = start_run(args, train_config=config.to_dict())
    dataset = load_dataset(args.dataset, "train")
    pseudo_gt = load_checkpoint(checkpoint_dir(args.cgan)) if args.cgan else None
    run = train_cgn(config, dataset, args.out, pseudo_gt, manifest=manifest)
    print(f"Trained {config.steps} steps, final mu_mask {run.manifest.get('final_mu_mask')}")
    return EXIT_OK


def cmd_cgn_train_cgan(args: argparse.Namespace) -> int:
    config = _train_config(args)
    manifest = start_run(args, train_config=config.to_dict())
    dataset = load_dataset(args.dataset, "train")
    train_cgan(config, dataset, args.out)
    manifest.add_checkpoint("cgan", Path(args.out) / "checkpoint" / "checkpoint.json")
    manifest["metrics"]["cgan"] = str(Path(args.out) / "metrics.csv")
    manifest.finish(status="ok", steps=config.steps)
    return EXIT_OK


def cmd_cgn_sample(args: argparse.Namespace) -> int:
    manifest = start_run(args)
    mechs = load_checkpoint(checkpoint_dir(args.ckpt))
    cf_set = sample_counterfactual_set(mechs, args.n_noise, args.cf_ratio, args.seed, args.variant)
    path = cf_set.save(Path(args.out) / "cf_set.npz")
    grid = save_image_grid(cf_set.images[:GRID_PREVIEW], Path(args.out) / "samples.png", NUM_CLASSES)
    manifest.add_artifact("cf_set", path)
    manifest.add_artifact("samples", grid)
    manifest.finish(status="ok", n_images=len(cf_set))
    print(f"Sampled {len(cf_set)} counterfactuals to {path}")
    return EXIT_OK


def cmd_cgn_interpolate(args: argparse.Namespace) -> int:
    manifest = start_run(args)
    mechs = load_checkpoint(checkpoint_dir(args.ckpt))
    u = sample_noise(mechs, 2, args.seed, "interpolate")
    frames = interpolate_scm(
        mechs, (u[:1], LabelTriple(*args.start)), (u[1:], LabelTriple(*args.end)), args.steps
    )
    rows = [torch.cat([getattr(s, name).expand(-1, 3, -1, -1) for s in frames]) for name in ("m", "f", "b", "x_gen")]
    grid = save_image_grid(torch.cat(rows).cpu(), Path(args.out) / "interpolation.png", args.steps)
    manifest.add_artifact("interpolation", grid)
    manifest.finish(status="ok")
    return EXIT_OK


# clf


def _check_variant(expected: str | None, stored) -> None:
    """Raise ConfigError when a stored dataset or set holds another variant."""
    for item in stored:
        if expected is not None and item.variant != expected:
            raise ConfigError(f"--variant {expected} does not match the stored {item.variant} data")


def cmd_clf_train(args: argparse.Namespace) -> int:
    config = _classifier_config(args)
    if args.method in ("cgn", "ensemble", "iv") and not (args.cf_ckpt or args.cf_set):
        raise InvalidArgumentError(f"method {args.method} needs --cf-ckpt or --cf-set")
    if args.method == "gan" and not args.gan_ckpt:
        raise InvalidArgumentError("method gan needs --gan-ckpt")
    if args.method == "irm" and not args.envs:
        raise InvalidArgumentError("method irm needs --envs")
    manifest = start_run(args, classifier_config=config.to_dict())

    test = load_dataset(args.dataset, "test") if args.dataset else None
    out = Path(args.out)
    if args.method == "irm":
        envs = [load_dataset(args.envs, name) for name in list_environments(args.envs)]
        _check_variant(args.variant, envs + ([test] if test else []))
        run = train_irm(envs, config, IrmSchedule(config.lambda_max, config.ramp_fraction), test, out)
    else:
        train = load_dataset(args.dataset, "train")
        _check_variant(args.variant, [train] + ([test] if test else []))
        if args.method == "baseline":
            run = train_baseline(train, config, test, out)
        elif args.method == "gan":
            run = train_gan_augmented(train, load_checkpoint(checkpoint_dir(args.gan_ckpt)), args.n_cf, config, test=test, out_dir=out)
        elif args.method == "iv":
            mechs = load_checkpoint(checkpoint_dir(args.cf_ckpt))
            run = train_iv_augmented(train, mechs, args.n_cf, config, test=test, out_dir=out)
        else:
            if args.cf_set:
                cf_set = CounterfactualSet.load(args.cf_set)
                _check_variant(train.variant, [cf_set])
            else:
                mechs = load_checkpoint(checkpoint_dir(args.cf_ckpt))
                n_noise = max(1, args.n_cf // args.cf_ratio)
                cf_set = sample_counterfactual_set(mechs, n_noise, args.cf_ratio, config.seed, train.variant)
            if args.method == "ensemble":
                run = train_ensemble(train, cf_set, config, test=test, out_dir=out)
            else:
                run = train_cf_augmented(train, cf_set, config=config, test=test, out_dir=out)

    index = save_classifier(run.model, out / "model", args.method)
    manifest.add_checkpoint("classifier", index)
    manifest["metrics"]["classifier"] = str(out / "metrics.csv")
    final = {name: run.metrics.column(name)[-1] for name in ("train_acc", "test_acc")} if len(run.metrics) else {}
    manifest.finish(status="ok", method=args.method, **final)
    print(f"{args.method}: {final}")
    return EXIT_OK


# eval


def cmd_eval_run(args: argparse.Namespace) -> int:
    manifest = start_run(args)
    model = load_classifier(args.model)
    dataset = load_dataset(args.dataset, args.split)
    acc = evaluate(model, dataset, args.head)
    heads = {role: evaluate(model, dataset, role) for role in model.head_roles} if len(model.head_roles) > 1 else None
    report = EvalReport()
    report.add_method(str(args.model), None, acc, heads)
    for path in render_report(report, args.out):
        manifest.add_artifact(path.name, path)
    manifest.finish(status="ok", accuracy=acc)
    print(f"accuracy {acc:.4f}")
    return EXIT_OK


def cmd_eval_causal_id(args: argparse.Namespace) -> int:
    config = _classifier_config(args)
    manifest = start_run(args, classifier_config=config.to_dict())
    mechs = load_checkpoint(checkpoint_dir(args.cgn))
    if args.envs:
        envs = [load_dataset(args.envs, name) for name in list_environments(args.envs)]
    else:
        train_digits, _ = _digits(args)
        envs = build_environments(
            args.variant, args.rho or CAUSAL_ID_RHOS, args.seed, train_digits, DEFAULT_SIGMA, _texture_bank(args, args.variant)
        )
    result = causal_identification(mechs, envs, args.n_noise, args.cf_ratio, config)
    report = EvalReport()
    report.add_causal(result)
    for path in render_report(report, args.out):
        manifest.add_artifact(path.name, path)
    manifest.finish(status="ok", causal=result.causal, ranges=result.ranges)
    print(f"stable signal(s): {', '.join(result.stable)}")
    return EXIT_OK


def cmd_eval_ablate(args: argparse.Namespace) -> int:
    grid = read_yaml(args.grid_config)
    unknown = set(grid) - {"counts", "cf_ratios", "seeds", "classifier"}
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    for key in ("counts", "cf_ratios", "seeds"):
        if not grid.get(key):
            raise ConfigError(f"grid config needs a non-empty '{key}' list")
    try:
        config = ClassifierConfig.from_dict(grid.get("classifier")).validate()
    except InvalidArgumentError as err:
        raise ConfigError(str(err)) from err
    manifest = start_run(args, grid=grid)

    mechs = load_checkpoint(checkpoint_dir(args.cgn))
    train, test = load_dataset(args.dataset, "train"), load_dataset(args.dataset, "test")
    result = ablate_cf_count(mechs, train, test, grid["counts"], grid["cf_ratios"], grid["seeds"], config)
    report = EvalReport()
    report.add_ablation(result)
    for path in render_report(report, args.out):
        manifest.add_artifact(path.name, path)
    manifest.finish(status="ok", spearman=result.spearman)
    return EXIT_OK


# report / repro


def cmd_report(args: argparse.Namespace) -> int:
    manifest = start_run(args)
    report = EvalReport()
    for path in args.inputs:
        part = Record.load(path)
        for name, entry in part.get("methods", {}).items():
            target = report["methods"].setdefault(name, {"train": [], "test": [], "heads": {}})
            target["train"] += entry["train"]
            target["test"] += entry["test"]
            for head, accs in entry["heads"].items():
                target["heads"].setdefault(head, []).extend(accs)
        report["causal"] += part.get("causal", [])
        report["ablation"].update(part.get("ablation", {}))
    samples = None
    if args.cgn:
        mechs = load_checkpoint(checkpoint_dir(args.cgn))
        samples = cf_grid_samples(mechs, args.seed, args.variant)
    for path in render_report(report, args.out, samples):
        manifest.add_artifact(path.name, path)
    manifest.finish(status="ok")
    return EXIT_OK


def cmd_repro(args: argparse.Namespace) -> int:
    if args.seeds < 1:
        raise InvalidArgumentError("seeds must be >= 1")
    manifest = start_run(args)
    checks = repro_suite(args.suite, args.seeds, args.out, args.variant, args.profile, args.data_root)
    manifest.add_artifact("checks", Path(args.out) / "checks.csv")
    failed = [c.name for c in checks if not c.passed]
    manifest.finish(status="checks_failed" if failed else "ok", passed=len(checks) - len(failed), failed=failed)
    if failed:
        _LOGGER.error("%s of %s checks failed: %s", len(failed), len(checks), ", ".join(failed))
        return EXIT_CHECKS_FAILED
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, out: bool = True) -> None:
    parser.add_argument("--seed", type=int, help="defaults to the config file value, else 0")
    parser.add_argument("--data-root", default=None, help=f"defaults to ${DATA_ROOT_ENV} or {DEFAULT_DATA_ROOT}")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    if out:
        parser.add_argument("--out", required=True, type=Path)
        parser.add_argument("--overwrite", action="store_true", help="allow a non-empty output directory")


def _add_digits(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--synthetic", type=int, default=0, metavar="N", help="use N synthetic digits instead of MNIST")
    parser.add_argument("--textures", choices=(PROCEDURAL, DTD), default=PROCEDURAL)


def _add_train(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, type=Path, help="directory written by 'dataset build'")
    parser.add_argument("--config", type=Path, help="YAML training config")
    parser.add_argument("--variant", choices=VARIANTS)
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--device")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pycgn", description="Counterfactual generative networks on biased MNIST.")
    commands = parser.add_subparsers(dest="command", required=True)

    def group(name: str, summary: str) -> argparse._SubParsersAction:
        sub = commands.add_parser(name, help=summary)
        return sub.add_subparsers(dest="action", required=True)

    def action(actions, name: str, func: Callable[[argparse.Namespace], int], summary: str, out: bool = True):
        sub = actions.add_parser(name, help=summary)
        _add_common(sub, out)
        sub.set_defaults(func=func)
        return sub

    dataset = group("dataset", "fetch sources and build biased datasets")
    p = action(dataset, "fetch", cmd_dataset_fetch, "download MNIST and/or DTD", out=False)
    p.add_argument("--what", choices=("mnist", "dtd", "all"), default="mnist")
    p = action(dataset, "build", cmd_dataset_build, "build train/test splits and environments")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--rho", type=float, action="append", help="environment correlation, repeatable")
    _add_digits(p)

    cgn = group("cgn", "train, sample and inspect counterfactual generators")
    p = action(cgn, "train", cmd_cgn_train, "train the mechanism set")
    _add_train(p)
    p.add_argument("--cgan", type=Path, help="cGAN checkpoint for reconstruction mode")
    p = action(cgn, "train-cgan", cmd_cgn_train_cgan, "train a plain conditional GAN")
    _add_train(p)
    p = action(cgn, "sample", cmd_cgn_sample, "sample a counterfactual set")
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--n-noise", type=int, default=DEFAULT_CF_COUNT // DEFAULT_CF_RATIO)
    p.add_argument("--cf-ratio", type=int, default=DEFAULT_CF_RATIO)
    p.add_argument("--variant", choices=VARIANTS, default=VARIANTS[1])
    p = action(cgn, "interpolate", cmd_cgn_interpolate, "interpolate between two (noise, labels) points")
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--start", type=int, nargs=3, default=(0, 0, 0), metavar=("SHAPE", "FG", "BG"))
    p.add_argument("--end", type=int, nargs=3, default=(9, 9, 9), metavar=("SHAPE", "FG", "BG"))

    clf = group("clf", "train classifiers")
    p = action(clf, "train", cmd_clf_train, "train one classifier method")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--variant", choices=VARIANTS, help="must match the variant the data was built with")
    p.add_argument("--dataset", type=Path, help="directory with train/test splits")
    p.add_argument("--envs", type=Path, help="directory with env<i> splits (irm)")
    p.add_argument("--cf-ckpt", type=Path, help="CGN checkpoint to sample counterfactuals from")
    p.add_argument("--cf-set", type=Path, help="counterfactual set written by 'cgn sample'")
    p.add_argument("--gan-ckpt", type=Path)
    p.add_argument("--n-cf", type=int, default=DEFAULT_CF_COUNT)
    p.add_argument("--cf-ratio", type=int, default=DEFAULT_CF_RATIO)
    p.add_argument("--config", type=Path, help="YAML classifier config")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--device")

    ev = group("eval", "evaluate classifiers and generators")
    p = action(ev, "run", cmd_eval_run, "accuracy of a classifier on a split")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--split", default="test")
    p.add_argument("--head", choices=HEAD_ROLES + ("ensemble",))
    p = action(ev, "causal-id", cmd_eval_causal_id, "identify the stable signal across environments")
    p.add_argument("--cgn", required=True, type=Path)
    p.add_argument("--variant", choices=VARIANTS, default=VARIANTS[1])
    p.add_argument("--envs", type=Path, help="stored environments; built from --rho otherwise")
    p.add_argument("--rho", type=float, action="append")
    p.add_argument("--n-noise", type=int, default=DEFAULT_CF_COUNT // DEFAULT_CF_RATIO)
    p.add_argument("--cf-ratio", type=int, default=1)
    p.add_argument("--config", type=Path)
    p.add_argument("--epochs", type=int)
    _add_digits(p)
    p = action(ev, "ablate", cmd_eval_ablate, "sweep counterfactual count and ratio")
    p.add_argument("--grid-config", required=True, type=Path)
    p.add_argument("--cgn", required=True, type=Path)
    p.add_argument("--dataset", required=True, type=Path)

    p = commands.add_parser("report", help="merge report.json files and render tables and plots")
    _add_common(p)
    p.add_argument("inputs", nargs="*", type=Path)
    p.add_argument("--cgn", type=Path, help="checkpoint for the 10 x 10 counterfactual grid")
    p.add_argument("--variant", choices=VARIANTS, default=VARIANTS[1])
    p.set_defaults(func=cmd_report)

    p = commands.add_parser("repro", help="run a reproduction suite with pass/fail checks")
    _add_common(p)
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--variant", choices=VARIANTS, action="append")
    p.add_argument("--profile", choices=sorted(PROFILES), default="full")
    p.set_defaults(func=cmd_repro)
    return parser


def exit_code(err: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(err, StageError) and err.__cause__ is not None:
        return exit_code(err.__cause__)
    if isinstance(err, (ConfigError, InvalidArgumentError, OutputExistsError)):
        return EXIT_USAGE
    if isinstance(err, MaskCollapseError):
        return EXIT_COLLAPSE
    if isinstance(err, NumericFailureError):
        return EXIT_NUMERIC
    if isinstance(err, FetchRequiredError):
        return EXIT_FETCH_REQUIRED
    return EXIT_STAGE_FAILURE


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, execute the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (None, 0) else EXIT_USAGE

    args.data_root = data_root(args.data_root)
    args.seed_given = args.seed is not None
    if not args.seed_given:
        args.seed = 0
    log = get_logger("pycgn", logging.DEBUG if args.verbose else logging.INFO)
    log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except Exception as err:  # noqa: BLE001
        code = exit_code(err)
        log.error("%s failed: %s", args.command, err)
        log.debug("Traceback", exc_info=True)
        _mark_failed(args, err)
        return code


def _mark_failed(args: argparse.Namespace, err: BaseException) -> None:
    path = Path(args.out) / MANIFEST_NAME if getattr(args, "out", None) else None
    if path is None or not path.exists():
        return
    manifest = Record.load(path)
    if manifest.get("status") == "running":
        manifest["status"] = "failed"
        manifest["error"] = str(err)
        manifest.save(path)


def main() -> None:
    raise SystemExit(run())
