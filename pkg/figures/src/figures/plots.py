"""Figure rendering from harness output files.

Reads the metrics CSV (`run_id,phase,epoch,batch,metric,value`) and run
record JSON emitted by the training harness; never recomputes accuracies.
Rendering is a pure function of the input files and spec.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_HEADER = ["run_id", "phase", "epoch", "batch", "metric", "value"]

TRAIN_COLOR = "tab:red"
VALID_COLOR = "tab:blue"
LINE_STYLES = ["-", "--", "-.", ":"]


class FigureInputError(ValueError):
    """Malformed CSV/JSON input or a reference to a missing run."""


@dataclass
class CurveSpec:
    csv_paths: list[str]
    run_ids: list[str] = field(default_factory=list)
    out_path: str = "curves.png"
    title: str = "Training and validation accuracy"
    xlabel: str = "training batch"
    ylabel: str = "accuracy"


def read_metrics(paths) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise FigureInputError(f"{path}: unexpected header {reader.fieldnames}")
            for row in reader:
                try:
                    row["value"] = float(row["value"])
                except ValueError as e:
                    raise FigureInputError(f"{path}: bad value {row['value']!r}") from e
                rows.append(row)
    return rows


def _accuracy_series(rows: list[dict], run_id: str):
    """(train batch xs/ys, validation epoch xs/ys) for one run.

    Validation points sit at the cumulative batch count of their epoch so
    both series share the x axis.
    """
    mine = [r for r in rows if r["run_id"] == run_id]
    if not mine:
        raise FigureInputError(f"run id {run_id!r} not present in the CSV")
    train = [r for r in mine if r["phase"] == "train" and r["metric"] == "accuracy"]
    val = [r for r in mine if r["phase"] == "validation" and r["metric"] == "accuracy"]
    for r in train + val:
        if not 0.0 <= r["value"] <= 1.0:
            raise FigureInputError(
                f"accuracy {r['value']} outside [0, 1] for run {run_id!r}")
    train.sort(key=lambda r: (int(r["epoch"]), int(r["batch"])))
    batches_per_epoch: dict[int, int] = {}
    for r in train:
        epoch = int(r["epoch"])
        batches_per_epoch[epoch] = batches_per_epoch.get(epoch, 0) + 1
    train_x = list(range(1, len(train) + 1))
    train_y = [r["value"] for r in train]
    val.sort(key=lambda r: int(r["epoch"]))
    val_x, seen = [], 0
    for r in val:
        seen += batches_per_epoch.get(int(r["epoch"]), 0)
        val_x.append(seen)
    val_y = [r["value"] for r in val]
    return (train_x, train_y), (val_x, val_y)


def plot_curves(spec: CurveSpec) -> str:
    """Per-batch training accuracy and per-epoch validation accuracy."""
    rows = read_metrics(spec.csv_paths)
    run_ids = spec.run_ids or sorted({r["run_id"] for r in rows})
    if not run_ids:
        raise FigureInputError("no runs to plot")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, run_id in enumerate(run_ids):
        (tx, ty), (vx, vy) = _accuracy_series(rows, run_id)
        style = LINE_STYLES[i % len(LINE_STYLES)]
        suffix = f" [{run_id}]" if len(run_ids) > 1 else ""
        ax.plot(tx, ty, style, color=TRAIN_COLOR, alpha=0.8,
                label="train (per batch)" + suffix)
        ax.plot(vx, vy, style, color=VALID_COLOR, marker="o",
                label="validation (per epoch)" + suffix)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return spec.out_path


def read_records(path) -> list[dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    records = payload if isinstance(payload, list) else [payload]
    for rec in records:
        if "test_acc" not in rec or "config" not in rec:
            raise FigureInputError(f"{path}: not a run record")
    return records


def _group_value(rec: dict, key: str):
    if key == "group":
        return rec.get("group", "")
    config = rec.get("config", {})
    if key in config:
        return config[key]
    gen = config.get("gen") or {}
    if key in gen:
        return gen[key]
    raise FigureInputError(f"group key {key!r} not found in record config")


def plot_sweep(records: list[dict], group_key: str, out_path: str,
               title: str | None = None) -> str:
    """Mean test accuracy with standard-deviation error bars per group."""
    if not records:
        raise FigureInputError("no records to plot")
    groups: dict[str, list[float]] = {}
    for rec in records:
        groups.setdefault(str(_group_value(rec, group_key)), []).append(rec["test_acc"])
    labels = list(groups)
    means = [float(np.mean(groups[k])) for k in labels]
    stds = [float(np.std(groups[k])) for k in labels]
    ns = sorted({len(groups[k]) for k in labels})
    n_text = ns[0] if len(ns) == 1 else f"{ns[0]}..{ns[-1]}"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(labels)), means, yerr=stds, capsize=4, color="tab:blue",
           alpha=0.85)
    ax.set_xticks(range(len(labels)), labels, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("test accuracy")
    ax.set_title(title or f"Sweep over {group_key} (n={n_text})")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_best_bars(records: list[dict], out_path: str,
                   title: str = "Top accuracy per model") -> str:
    """Best test accuracy achieved by each model kind."""
    if not records:
        raise FigureInputError("no records to plot")
    best: dict[str, float] = {}
    for rec in records:
        model = rec.get("config", {}).get("model", "?")
        best[model] = max(best.get(model, 0.0), rec["test_acc"])
    labels = list(best)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(labels)), [best[k] for k in labels], color="tab:green", alpha=0.85)
    ax.set_xticks(range(len(labels)), labels, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("best test accuracy")
    ax.set_title(title)
    for i, key in enumerate(labels):
        ax.text(i, best[key] + 0.02, f"{100 * best[key]:.1f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
