"""Experiment driver: training loops, sweeps, statistics, reports, CLI."""

from .config import MODEL_KINDS, STRUCTURE_KINDS, TrainConfig, load_config_file
from .metrics import CSV_HEADER, metrics_rows, read_metrics_csv, write_metrics_csv
from .stats import anova_oneway, parsing_f1, tree_spans
from .sweep import SWEEP_AXES, config_for, run_sweep, write_report
from .train import (
    RunRecord,
    TrainAbort,
    build_model,
    early_stop_check,
    evaluate,
    mean_parsing_f1,
    resolve_datasets,
    train,
    train_with_model,
)

__all__ = [
    "CSV_HEADER", "MODEL_KINDS", "RunRecord", "STRUCTURE_KINDS", "SWEEP_AXES",
    "TrainAbort", "TrainConfig", "anova_oneway", "build_model", "config_for",
    "early_stop_check", "evaluate", "load_config_file", "mean_parsing_f1",
    "metrics_rows", "parsing_f1", "read_metrics_csv", "resolve_datasets",
    "run_sweep", "train", "train_with_model", "tree_spans", "write_metrics_csv",
    "write_report",
]
