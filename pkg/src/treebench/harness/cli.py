"""Command-line driver: gen / train / sweep / eval / report / trees.

Every flag can also come from a flat config file (`key = value`, dotted
keys like `train.model`); explicit flags win.  Exit codes: 0 success,
1 usage or config error, 2 runtime or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import listops
from ..listops import ListOpsError
from ..models import load_checkpoint, save_checkpoint
from ..numcore import NumericError
from .config import STRUCTURE_KINDS, TrainConfig, load_config_file
from .metrics import write_metrics_csv
from .stats import parsing_f1
from .sweep import SWEEP_AXES, run_sweep, write_report
from .train import RunRecord, TrainAbort, evaluate, train_with_model


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# flag destinations that belong to the training config, keyed by config-file suffix
_TRAIN_KEYS = {
    "model": "model", "embedding-dim": "embedding_dim", "hidden-dim": "hidden_dim",
    "memory-slots": "memory_slots", "gate-temperature": "gate_temperature",
    "slot-bias": "slot_bias_init",
    "policy-hidden": "policy_hidden", "dropout": "dropout",
    "optimizer": "optimizer", "lr": "learning_rate", "batch-size": "batch_size",
    "epochs": "max_epochs", "early-stop": "early_stop", "grad-clip": "grad_clip",
    "entropy-coef": "entropy_coef", "ppo": "ppo", "ppo-clip": "ppo_clip",
    "ppo-epochs": "ppo_epochs", "train-data": "train_path",
    "valid-data": "valid_path", "test-data": "test_path",
    "gen-set": "gen.operator_set", "gen-size": "gen.size", "gen-seed": "gen.seed",
    "gen-depth": "gen.max_depth", "gen-args": "gen.max_args",
    "gen-p": "gen.recursion_p", "gen-length": "gen.max_length",
    "test-size": "test_size", "subset": "subset", "val-fraction": "val_fraction",
    "seed": "seed", "f1-examples": "f1_examples",
}


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    add = p.add_argument
    add("--config", help="flat key=value config file; flags override it")
    add("--model", dest="model")
    add("--embedding-dim", dest="embedding_dim", type=int)
    add("--hidden-dim", dest="hidden_dim", type=int)
    add("--memory-slots", dest="memory_slots", type=int)
    add("--gate-temperature", dest="gate_temperature", type=float)
    add("--slot-bias", dest="slot_bias_init", type=float)
    add("--policy-hidden", dest="policy_hidden", type=int)
    add("--dropout", dest="dropout", type=float)
    add("--optimizer", dest="optimizer", choices=("sgd", "adam", "adadelta"))
    add("--lr", dest="learning_rate", type=float)
    add("--batch-size", dest="batch_size", type=int)
    add("--epochs", dest="max_epochs", type=int)
    add("--early-stop", dest="early_stop", action="store_true", default=None)
    add("--no-early-stop", dest="early_stop", action="store_false", default=None)
    add("--grad-clip", dest="grad_clip", type=float)
    add("--entropy-coef", dest="entropy_coef", type=float)
    add("--ppo", dest="ppo", action="store_true", default=None)
    add("--no-ppo", dest="ppo", action="store_false", default=None)
    add("--ppo-clip", dest="ppo_clip", type=float)
    add("--ppo-epochs", dest="ppo_epochs", type=int)
    add("--train-data", dest="train_path")
    add("--valid-data", dest="valid_path")
    add("--test-data", dest="test_path")
    add("--gen-set", dest="gen.operator_set", choices=tuple(listops.OPERATOR_SETS))
    add("--gen-size", dest="gen.size", type=int)
    add("--gen-seed", dest="gen.seed", type=int)
    add("--gen-depth", dest="gen.max_depth", type=int)
    add("--gen-args", dest="gen.max_args", type=int)
    add("--gen-p", dest="gen.recursion_p", type=float)
    add("--gen-length", dest="gen.max_length", type=int)
    add("--test-size", dest="test_size", type=int)
    add("--subset", dest="subset", type=int)
    add("--val-fraction", dest="val_fraction", type=float)
    add("--seed", dest="seed", type=int)
    add("--f1-examples", dest="f1_examples", type=int)


def build_train_config(args: argparse.Namespace, section: str) -> TrainConfig:
    """CLI flags > config file > dataclass defaults."""
    file_cfg: dict = {}
    if getattr(args, "config", None):
        file_cfg = load_config_file(args.config)

    merged: dict = {}
    gen_fields: dict = {}
    for flag, dest in _TRAIN_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            for key in (f"{section}.{flag}", f"train.{flag}"):
                if key in file_cfg:
                    value = file_cfg[key]
                    break
        if value is None:
            continue
        if dest.startswith("gen."):
            gen_fields[dest.removeprefix("gen.")] = value
        else:
            merged[dest] = value
    if gen_fields:
        merged["gen"] = listops.GenConfig(**{"size": 1000, **gen_fields})
    try:
        cfg = TrainConfig().with_(**merged)
        cfg.validate()
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from e
    return cfg


def _write_run_outputs(out_dir: Path, record: RunRecord, model) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "record.json").write_text(record.to_json() + "\n", encoding="utf-8")
    write_metrics_csv(out_dir / "metrics.csv", record)
    if model is not None:
        save_checkpoint(out_dir / "checkpoint.npz", model)


def cmd_gen(args) -> int:
    cfg = listops.GenConfig(
        operator_set=args.operator_set, size=args.size, seed=args.seed,
        max_depth=args.max_depth, max_args=args.max_args,
        recursion_p=args.recursion_p, max_length=args.max_length)
    try:
        cfg.validate()
    except ListOpsError as e:
        raise UsageError(str(e)) from e
    examples = listops.generate(cfg)
    listops.write_dataset(args.out, examples)
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = build_train_config(args, "train")
    record, model = train_with_model(cfg)
    out_dir = Path(args.out_dir)
    _write_run_outputs(out_dir, record, model)
    print(f"run {record.run_id}: test accuracy {100 * record.test_acc:.2f}% "
          f"after {record.epochs_run} epochs ({record.wall_minutes:.2f} min)")
    print(f"outputs in {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    base = build_train_config(args, "sweep")
    values = [v for v in args.values.split(",") if v]
    if not values:
        raise UsageError("--values must be a non-empty comma list")
    records, report = run_sweep(base, args.axis, values,
                                seeds_per_value=args.seeds_per_value)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        run_dir = out_dir / "runs" / rec.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "record.json").write_text(rec.to_json() + "\n", encoding="utf-8")
        write_metrics_csv(run_dir / "metrics.csv", rec)
    (out_dir / "records.json").write_text(
        json.dumps([json.loads(r.to_json()) for r in records], indent=2) + "\n",
        encoding="utf-8")
    (out_dir / "report.md").write_text(report + "\n", encoding="utf-8")
    print(report)
    print(f"outputs in {out_dir}")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    data = listops.read_dataset(args.data, limit=args.limit)
    acc = evaluate(model, data)
    print(f"accuracy {100 * acc:.2f}% on {len(data)} examples")
    return 0


def cmd_report(args) -> int:
    records: list[RunRecord] = []
    for path in args.records:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        items = payload if isinstance(payload, list) else [payload]
        records.extend(RunRecord(**item) for item in items)
    if not records:
        raise UsageError("no records found")
    report = write_report(records)
    if args.out:
        Path(args.out).write_text(report + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(report)
    return 0


def cmd_trees(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if model.kind not in STRUCTURE_KINDS:
        raise UsageError(f"model kind '{model.kind}' does not induce trees")
    data = listops.read_dataset(args.data, limit=args.limit)
    scores = []
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for ex in data:
            tree = model.induced_tree(ex)
            fh.write(listops.to_sexpr(tree) + "\n")
            scores.append(parsing_f1(tree, listops.token_level_tree(ex.gold_tree)))
    print(f"wrote {len(scores)} induced parses to {args.out}; "
          f"mean parsing F1 {float(np.mean(scores)):.4f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="treebench",
                     description="ListOps diagnostics: generate data, train models, "
                                 "sweep configurations, score induced trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset file")
    p.add_argument("--out", required=True)
    p.add_argument("--operator-set", default="d20s", choices=tuple(listops.OPERATOR_SETS))
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--max-args", type=int, default=5)
    p.add_argument("--recursion-p", type=float, default=0.25)
    p.add_argument("--max-length", type=int, default=130)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="run one training configuration")
    _add_train_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train along one axis of values")
    _add_train_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma list of axis values")
    p.add_argument("--seeds-per-value", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render records into a comparison table")
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("trees", help="export induced parses and score parsing F1")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_trees)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (ListOpsError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (TrainAbort, NumericError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # anything else is a runtime failure, not a crash
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
