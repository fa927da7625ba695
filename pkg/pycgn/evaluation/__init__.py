"""Metrics, causal identification, ablations and reports."""

from __future__ import annotations

from .ablation import AblationResult, ablate_cf_count, median_curves, monotonicity
from .causal import SIGNALS, CausalIdResult, causal_identification, identify_stable_signal, signal_accuracies
from .metrics import estimate_colors, evaluate, palette_agreement, seed_stats
from .report import EvalReport, cf_grid_samples, render_report

__all__ = [
    AblationResult,
    CausalIdResult,
    EvalReport,
    SIGNALS,
    ablate_cf_count,
    causal_identification,
    cf_grid_samples,
    estimate_colors,
    evaluate,
    identify_stable_signal,
    median_curves,
    monotonicity,
    palette_agreement,
    render_report,
    seed_stats,
    signal_accuracies,
]
