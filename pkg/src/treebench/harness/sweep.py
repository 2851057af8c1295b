"""Axis sweeps over a base config and the comparison report they produce."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .config import TrainConfig
from .stats import anova_oneway
from .train import RunRecord, train

SWEEP_AXES = ("optimizer", "batch_size", "subset_size", "dataset", "seed")


def config_for(base: TrainConfig, axis: str, value) -> TrainConfig:
    if axis == "optimizer":
        return base.with_(optimizer=str(value))
    if axis == "batch_size":
        return base.with_(batch_size=int(value))
    if axis == "subset_size":
        return base.with_(subset=int(value))
    if axis == "seed":
        return base.with_(seed=int(value))
    if axis == "dataset":
        if base.gen is None:
            raise ValueError("dataset axis needs a generator-based config")
        return base.with_(gen=replace(base.gen, operator_set=str(value)))
    raise ValueError(f"unknown sweep axis '{axis}' (one of {SWEEP_AXES})")


def run_sweep(base: TrainConfig, axis: str, values, seeds_per_value: int = 1):
    """One train() per (value, replicate seed); returns (records, report text).

    All values share the base seed policy: replicate j runs with seed
    base.seed + j for every value, so groups are seed-matched.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis '{axis}' (one of {SWEEP_AXES})")
    values = list(values)
    if not values:
        raise ValueError("run_sweep: empty value list")
    if seeds_per_value < 1:
        raise ValueError("run_sweep: seeds_per_value must be >= 1")
    records: list[RunRecord] = []
    for value in values:
        cfg = config_for(base, axis, value)
        for j in range(seeds_per_value):
            run_cfg = cfg if seeds_per_value == 1 else cfg.with_(seed=cfg.seed + j)
            rec = train(run_cfg)
            rec.group = f"{axis}={value}"
            rec.run_id = f"{axis}-{value}-seed{run_cfg.seed}-{rec.run_id}"
            records.append(rec)
    report = write_report(records, title=f"Sweep over {axis}")
    return records, report


def _fmt_pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def write_report(records, title: str | None = None) -> str:
    """Deterministic markdown comparison table.

    One block per record group (first-appearance order); the best accuracy
    in each block is bolded, ties all bolded.  Carries both epochs-run and
    minutes so convergence time and per-epoch cost stay distinguishable.
    """
    records = list(records)
    if not records:
        raise ValueError("write_report: no records")
    blocks: dict[str, list[RunRecord]] = {}
    for rec in records:
        blocks.setdefault(rec.group or "", []).append(rec)

    lines: list[str] = []
    if title:
        lines += [f"# {title}", ""]
    for group, recs in blocks.items():
        if group:
            lines += [f"### {group}", ""]
        lines.append("| Run | Model | Dataset | Accuracy (%) | Epochs | Time (min) |")
        lines.append("|---|---|---|---|---|---|")
        best = max(r.test_acc for r in recs)
        for r in recs:
            acc = _fmt_pct(r.test_acc)
            if r.test_acc == best:
                acc = f"**{acc}**"
            lines.append(f"| {r.run_id} | {r.config['model']} | "
                         f"{TrainConfig.from_dict(r.config).dataset_id} | {acc} | "
                         f"{r.epochs_run} | {r.wall_minutes:.2f} |")
        lines.append("")

    multi = [recs for recs in blocks.values() if len(recs) >= 2]
    if multi:
        lines.append("Group statistics (test accuracy):")
        lines.append("")
        for group, recs in blocks.items():
            if len(recs) < 2:
                continue
            accs = [r.test_acc for r in recs]
            lines.append(f"- {group}: mean {_fmt_pct(float(np.mean(accs)))}%, "
                         f"std {100.0 * float(np.std(accs)):.2f} (n={len(accs)})")
        if len(multi) >= 2:
            f_stat, p_value = anova_oneway([[r.test_acc for r in recs] for recs in multi])
            f_text = "inf" if math.isinf(f_stat) else f"{f_stat:.4f}"
            lines.append(f"- one-way ANOVA across groups: F = {f_text}, p = {p_value:.4f}")
        lines.append("")
    return "\n".join(lines)
