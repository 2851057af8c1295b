"""Run a small optimizer sweep, print the report, and persist the artifacts.

Sweeps reuse one base config and vary a single axis; with seed replicates
the report adds group means, standard deviations, and a one-way ANOVA.
The metrics CSV written here is exactly what the figures package plots.
"""

from pathlib import Path

from treebench.harness import TrainConfig, run_sweep, write_metrics_csv
from treebench.listops import GenConfig

base = TrainConfig(
    model="tree_gru",
    gen=GenConfig(operator_set="d20s", max_depth=2, max_args=3,
                  recursion_p=0.4, max_length=30, size=400, seed=9),
    test_size=200, batch_size=32, hidden_dim=16, embedding_dim=8,
    max_epochs=2, early_stop=False, seed=1,
)

records, report = run_sweep(base, "optimizer", ["adam", "adadelta", "sgd"],
                            seeds_per_value=2)
print(report)

out = Path("demo_outputs")
out.mkdir(exist_ok=True)
write_metrics_csv(out / "sweep_metrics.csv", records)
(out / "sweep_report.md").write_text(report + "\n", encoding="utf-8")
print(f"wrote {out / 'sweep_metrics.csv'} and {out / 'sweep_report.md'}")
print("render with: figures curves --in demo_outputs/sweep_metrics.csv "
      f"--runs {records[0].run_id} --out demo_outputs/curves.png")
