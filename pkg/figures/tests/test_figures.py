"""Figures package: curve/sweep/bar rendering from fixture files."""

import json
import xml.etree.ElementTree as ET

import pytest

from figures import (
    CurveSpec,
    FigureInputError,
    plot_best_bars,
    plot_curves,
    plot_sweep,
    read_records,
)
from figures.cli import main as cli_main

CSV_HEADER = "run_id,phase,epoch,batch,metric,value"


def sample_csv(tmp_path, name="metrics.csv", runs=("run-a",), bad_value=None):
    lines = [CSV_HEADER]
    for run in runs:
        for epoch in range(2):
            for batch in range(3):
                value = 0.2 + 0.1 * epoch + 0.02 * batch
                lines.append(f"{run},train,{epoch},{batch},accuracy,{value}")
            lines.append(f"{run},validation,{epoch},,accuracy,{0.3 + 0.2 * epoch}")
        lines.append(f"{run},test,,,accuracy,0.55")
    if bad_value is not None:
        lines.append(f"{runs[0]},train,2,0,accuracy,{bad_value}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def sample_records(tmp_path, name="records.json"):
    records = []
    for group, base in (("batch_size=32", 0.55), ("batch_size=64", 0.7)):
        for j in range(5):
            records.append({
                "run_id": f"{group}-s{j}",
                "config": {"model": "tree_lstm" if j % 2 else "lstm",
                           "batch_size": int(group.split("=")[1]),
                           "gen": {"operator_set": "d20s"}},
                "test_acc": base + 0.01 * j,
                "epochs_run": 3,
                "wall_minutes": 1.0,
                "group": group,
            })
    path = tmp_path / name
    path.write_text(json.dumps(records), encoding="utf-8")
    return path


def assert_valid_image(path):
    data = path.read_bytes()
    assert len(data) > 500
    if path.suffix == ".png":
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
    else:
        root = ET.fromstring(data)  # parses iff well-formed XML
        assert root.tag.endswith("svg")


def test_plot_curves_renders_png(tmp_path):
    csv_path = sample_csv(tmp_path)
    out = tmp_path / "curves.png"
    spec = CurveSpec(csv_paths=[str(csv_path)], run_ids=["run-a"], out_path=str(out))
    plot_curves(spec)
    assert_valid_image(out)


def test_plot_curves_two_runs_svg(tmp_path):
    csv_path = sample_csv(tmp_path, runs=("run-a", "run-b"))
    out = tmp_path / "curves.svg"
    spec = CurveSpec(csv_paths=[str(csv_path)], run_ids=["run-a", "run-b"],
                     out_path=str(out))
    plot_curves(spec)
    assert_valid_image(out)


def test_plot_curves_unknown_run(tmp_path):
    csv_path = sample_csv(tmp_path)
    spec = CurveSpec(csv_paths=[str(csv_path)], run_ids=["nope"],
                     out_path=str(tmp_path / "x.png"))
    with pytest.raises(FigureInputError):
        plot_curves(spec)


def test_plot_curves_rejects_out_of_range(tmp_path):
    csv_path = sample_csv(tmp_path, bad_value=1.4)
    spec = CurveSpec(csv_paths=[str(csv_path)], out_path=str(tmp_path / "x.png"))
    with pytest.raises(FigureInputError):
        plot_curves(spec)


def test_plot_curves_rejects_malformed_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(FigureInputError):
        plot_curves(CurveSpec(csv_paths=[str(path)], out_path=str(tmp_path / "x.png")))


def test_plot_sweep_two_groups_n5(tmp_path):
    records = read_records(sample_records(tmp_path))
    out = tmp_path / "sweep.png"
    plot_sweep(records, "group", str(out))
    assert_valid_image(out)


def test_plot_sweep_zero_variance_group(tmp_path):
    records = [{"run_id": f"r{j}", "config": {"model": "lstm"}, "test_acc": 0.8,
                "group": "g"} for j in range(5)]
    out = tmp_path / "flat.png"
    plot_sweep(records, "group", str(out))
    assert_valid_image(out)


def test_plot_sweep_group_by_config_key(tmp_path):
    records = read_records(sample_records(tmp_path))
    out = tmp_path / "by_batch.svg"
    plot_sweep(records, "batch_size", str(out))
    assert_valid_image(out)


def test_plot_bars_best_per_model(tmp_path):
    records = read_records(sample_records(tmp_path))
    out = tmp_path / "bars.png"
    plot_best_bars(records, str(out))
    assert_valid_image(out)


def test_cli_round_trip(tmp_path):
    csv_path = sample_csv(tmp_path)
    records_path = sample_records(tmp_path)
    out1 = tmp_path / "c.png"
    assert cli_main(["curves", "--in", str(csv_path), "--out", str(out1),
                     "--runs", "run-a"]) == 0
    assert_valid_image(out1)
    out2 = tmp_path / "s"
    assert cli_main(["sweep", "--in", str(records_path), "--out", str(out2),
                     "--format", "svg"]) == 0
    assert_valid_image(tmp_path / "s.svg")
    out3 = tmp_path / "b.png"
    assert cli_main(["bars", "--in", str(records_path), "--out", str(out3)]) == 0
    assert_valid_image(out3)
    assert cli_main(["curves", "--in", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path / "x.png")]) == 1
