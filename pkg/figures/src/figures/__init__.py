"""Chart rendering for treebench training outputs (CSV metrics, JSON records)."""

from .plots import (
    CSV_HEADER,
    CurveSpec,
    FigureInputError,
    plot_best_bars,
    plot_curves,
    plot_sweep,
    read_metrics,
    read_records,
)

__all__ = [
    "CSV_HEADER", "CurveSpec", "FigureInputError", "plot_best_bars",
    "plot_curves", "plot_sweep", "read_metrics", "read_records",
]
