"""Metrics persistence: the per-run CSV stream consumed by reports and figures.

Schema: header `run_id,phase,epoch,batch,metric,value`; one row per recorded
batch or epoch metric, UTF-8 with LF line endings.  Epoch and batch indices
are 0-based; epoch-level rows leave the batch column empty.
"""

from __future__ import annotations

import csv

from .train import RunRecord

CSV_HEADER = ["run_id", "phase", "epoch", "batch", "metric", "value"]


def metrics_rows(record: RunRecord) -> list[list[str]]:
    rows: list[list[str]] = []
    rid = record.run_id
    for epoch, batch_accs in enumerate(record.train_batch_acc):
        for batch, acc in enumerate(batch_accs):
            rows.append([rid, "train", str(epoch), str(batch), "accuracy", repr(acc)])
    for epoch, acc in enumerate(record.val_epoch_acc):
        rows.append([rid, "validation", str(epoch), "", "accuracy", repr(acc)])
    for epoch, f1 in enumerate(record.val_epoch_f1):
        rows.append([rid, "validation", str(epoch), "", "parsing_f1", repr(f1)])
    rows.append([rid, "test", "", "", "accuracy", repr(record.test_acc)])
    return rows


def write_metrics_csv(path, records) -> None:
    if isinstance(records, RunRecord):
        records = [records]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerows(metrics_rows(record))


def read_metrics_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected metrics header: {reader.fieldnames}")
        return [dict(row) for row in reader]
