"""Evaluation reports and their rendering to CSV, PNG grids and plots."""

from __future__ import annotations

import csv
import io
import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import torch  # noqa: E402

from ..const import COLORED, NUM_CLASSES  # noqa: E402
from ..exceptions import InvalidArgumentError  # noqa: E402
from ..scm import LabelTriple, MechanismSet, forward_scm, sample_noise  # noqa: E402
from ..utils import Record, atomic_write_text, save_image_grid  # noqa: E402
from .ablation import AblationResult  # noqa: E402
from .causal import CausalIdResult  # noqa: E402
from .metrics import seed_stats  # noqa: E402

_LOGGER = logging.getLogger(__name__)

TABLE2_NAME = "table2.csv"
TABLE6_NAME = "table6.csv"
ABLATION_NAME = "ablation.csv"
GRID_NAME = "cf_grid.png"
REPORT_NAME = "report.json"


class EvalReport(Record):
    """Accuracies per method and seed, causal identification runs and ablation curves."""

    def __init__(self, default: dict | None = None) -> None:
        super().__init__(default)
        self.setdefault("methods", {})
        self.setdefault("causal", [])
        self.setdefault("ablation", {})

    def add_method(self, name: str, train_acc: float | None, test_acc: float, heads: dict | None = None) -> None:
        """Record one seed of a classifier method."""
        entry = self["methods"].setdefault(name, {"train": [], "test": [], "heads": {}})
        if train_acc is not None:
            entry["train"].append(float(train_acc))
        entry["test"].append(float(test_acc))
        for head, acc in (heads or {}).items():
            entry["heads"].setdefault(head, []).append(float(acc))

    def add_causal(self, result: CausalIdResult) -> None:
        """Record one seed of causal identification."""
        self["causal"].append(
            {
                "rhos": list(result.rhos),
                "table": result.table,
                "ranges": result.ranges,
                "stable": result.stable,
            }
        )

    def add_ablation(self, result: AblationResult) -> None:
        """Record a count/ratio sweep; keys are stored as strings."""
        self["ablation"][result.variant] = {
            "rows": result.rows,
            "curves": {
                str(ratio): {str(count): acc for count, acc in curve.items()}
                for ratio, curve in result.curves.items()
            },
            "spearman": {str(ratio): value for ratio, value in result.spearman.items()},
        }

    def accuracies(self):
        for entry in self["methods"].values():
            yield from entry["train"]
            yield from entry["test"]
            for accs in entry["heads"].values():
                yield from accs
        for run in self["causal"]:
            for accs in run["table"].values():
                yield from accs
        for sweep in self["ablation"].values():
            for row in sweep["rows"]:
                yield row["test_acc"]

    def validate(self) -> "EvalReport":
        """Raises InvalidArgumentError if an accuracy leaves [0, 1] or a range is negative."""
        for acc in self.accuracies():
            if not 0.0 <= acc <= 1.0:
                raise InvalidArgumentError(f"accuracy {acc} outside [0, 1]")
        for run in self["causal"]:
            if any(value < 0 for value in run["ranges"].values()):
                raise InvalidArgumentError("accuracy ranges must be nonnegative")
        return self

    def table2_rows(self) -> list[dict]:
        rows = []
        for name, entry in self["methods"].items():
            train, test = seed_stats(entry["train"]), seed_stats(entry["test"])
            rows.append(
                {
                    "method": name,
                    "seeds": test["n"],
                    "train_median": train.get("median"),
                    "test_median": test.get("median"),
                    "test_min": test.get("min"),
                    "test_max": test.get("max"),
                    "test_mean": test.get("mean"),
                    "test_std": test.get("std"),
                }
            )
        return rows

    def table6_rows(self) -> list[dict]:
        if not self["causal"]:
            return []
        rhos = self["causal"][0]["rhos"]
        rows = []
        for signal in self["causal"][0]["table"]:
            row: dict = {"signal": signal}
            for idx, rho in enumerate(rhos):
                stats = seed_stats([run["table"][signal][idx] for run in self["causal"]])
                row[f"rho_{rho}_mean"] = stats["mean"]
                row[f"rho_{rho}_std"] = stats["std"]
            ranges = seed_stats([run["ranges"][signal] for run in self["causal"]])
            row["range_mean"] = ranges["mean"]
            row["range_std"] = ranges["std"]
            row["stable_in_seeds"] = sum(signal in run["stable"] for run in self["causal"])
            rows.append(row)
        return rows

    def ablation_rows(self) -> list[dict]:
        rows = []
        for variant, sweep in self["ablation"].items():
            for ratio, curve in sweep["curves"].items():
                for count, acc in curve.items():
                    rows.append(
                        {
                            "variant": variant,
                            "cf_ratio": int(ratio),
                            "count": int(count),
                            "median_test_acc": acc,
                            "spearman": sweep["spearman"][ratio],
                        }
                    )
        return rows


def _format(value) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "undefined"
    if isinstance(value, float):
        return f"{value:.4f}"
    return "" if value is None else str(value)


def write_csv(rows: list[dict], path: Path) -> Path:
    """Write dict rows with the first row's keys as header."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    columns = list(rows[0])
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format(row.get(column)) for column in columns])
    atomic_write_text(path, buffer.getvalue())
    return path


def plot_ablation(variant: str, sweep: dict, path: Path) -> Path:
    """Median accuracy versus counterfactual count (one line per ratio), and versus ratio."""
    curves = {int(r): {int(c): a for c, a in curve.items()} for r, curve in sweep["curves"].items()}
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    for ratio in sorted(curves):
        counts = sorted(curves[ratio])
        left.plot(counts, [curves[ratio][c] for c in counts], marker="o", label=f"ratio {ratio}")
    left.set_xscale("log")
    left.set_xlabel("counterfactual images")
    left.set_ylabel("median test accuracy")
    left.legend()

    all_counts = sorted({c for curve in curves.values() for c in curve})
    for count in all_counts:
        ratios = sorted(r for r in curves if count in curves[r])
        right.plot(ratios, [curves[r][count] for r in ratios], marker="o", label=f"{count}")
    right.set_xlabel("counterfactual ratio")
    right.legend(title="count")

    fig.suptitle(variant)
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def cf_grid_samples(mechs: MechanismSet, seed: int, variant: str) -> torch.Tensor:
    """10 x 10 counterfactuals of one noise vector.

    Row r fixes the shape label r; column c sets the fg label to c and the
    bg label to 9 - c (colored MNIST keeps bg equal to the shape label).
    """
    rows = torch.arange(NUM_CLASSES).repeat_interleave(NUM_CLASSES)
    cols = torch.arange(NUM_CLASSES).repeat(NUM_CLASSES)
    bg = rows if variant == COLORED else NUM_CLASSES - 1 - cols
    u = sample_noise(mechs, 1, seed, "grid").repeat(NUM_CLASSES * NUM_CLASSES, 1)
    return forward_scm(mechs, u, LabelTriple(rows, cols, bg)).x_gen.cpu()


def render_report(report: EvalReport, out_dir: str | Path, samples: torch.Tensor | None = None) -> list[Path]:
    """Write every table the report supports, the sample grid and the plots.

    Args:
        report (EvalReport): Validated before anything is written.
        out_dir (str | Path): Target directory.
        samples (torch.Tensor, optional): Images for the grid, 10 per row.

    Returns:
        list[Path]: Written files.
    """
    report.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    for name, rows in (
        (TABLE2_NAME, report.table2_rows()),
        (TABLE6_NAME, report.table6_rows()),
        (ABLATION_NAME, report.ablation_rows()),
    ):
        if rows:
            written.append(write_csv(rows, out_dir / name))

    for variant, sweep in sorted(report["ablation"].items()):
        written.append(plot_ablation(variant, sweep, out_dir / f"ablation_{variant}.png"))

    if samples is not None and len(samples):
        written.append(save_image_grid(samples, out_dir / GRID_NAME, NUM_CLASSES))

    written.append(report.save(out_dir / REPORT_NAME))
    _LOGGER.info("Rendered %s report files to %s", len(written), out_dir)
    return written
