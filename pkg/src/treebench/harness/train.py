"""Training loop, evaluation, early stopping, and the RunRecord it produces.

One optimizer step per batch with per-example gradient accumulation (tree
and latent-parse graphs vary per example, so there is no shape batching).
Training accuracy is recorded per batch, validation accuracy per epoch; the
best-validation parameters are the ones evaluated on the test split.
Everything is determined by (config, seed): data order, trajectory
sampling and dropout each draw from their own seed-derived stream.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import listops
from ..latent_parser import LatentParserModel, ParserConfig, ppo_loss, reinforce_loss
from ..models import Model, ModelConfig, GoldTreeModel, SequentialModel
from ..numcore import (
    NumericError,
    add,
    backward,
    clip_global_norm,
    cross_entropy_with_logits,
    make_optimizer,
    no_grad,
    recording,
)
from ..ordered_memory import OMConfig, OrderedMemoryModel, extract_tree
from .config import STRUCTURE_KINDS, TrainConfig
from .stats import parsing_f1


class TrainAbort(RuntimeError):
    """A run hit a non-finite loss or update; carries the run diagnostic."""


@dataclass
class RunRecord:
    """Everything a report or figure needs to know about one run."""

    run_id: str
    config: dict
    train_batch_acc: list[list[float]] = field(default_factory=list)
    val_epoch_acc: list[float] = field(default_factory=list)
    val_epoch_f1: list[float] = field(default_factory=list)
    test_acc: float = 0.0
    best_epoch: int = -1
    epochs_run: int = 0
    wall_minutes: float = 0.0
    group: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @staticmethod
    def from_json(text: str) -> "RunRecord":
        return RunRecord(**json.loads(text))

    def equal_results(self, other: "RunRecord") -> bool:
        """Bit-identical comparison of everything except wall-clock time."""
        keys = ("run_id", "config", "train_batch_acc", "val_epoch_acc",
                "val_epoch_f1", "test_acc", "best_epoch", "epochs_run", "group")
        return all(getattr(self, k) == getattr(other, k) for k in keys)


def early_stop_check(history) -> bool:
    """True (stop) iff the last two validation deltas are both strictly negative."""
    h = list(history)
    if len(h) < 3:
        return False
    return h[-1] < h[-2] and h[-2] < h[-3]


def build_model(config: TrainConfig) -> Model:
    kind = config.model
    if kind in ("lstm", "gru"):
        return SequentialModel(ModelConfig(
            cell=kind, embedding_dim=config.embedding_dim, hidden_dim=config.hidden_dim,
            dropout=config.dropout, seed=config.seed))
    if kind in ("tree_lstm", "tree_gru"):
        return GoldTreeModel(ModelConfig(
            cell=kind, embedding_dim=config.embedding_dim, hidden_dim=config.hidden_dim,
            dropout=config.dropout, seed=config.seed))
    if kind == "ordered_memory":
        return OrderedMemoryModel(OMConfig(
            memory_slots=config.memory_slots, hidden_dim=config.hidden_dim,
            embedding_dim=config.embedding_dim, gate_temperature=config.gate_temperature,
            slot_bias_init=config.slot_bias_init, dropout=config.dropout,
            seed=config.seed))
    if kind == "latent_parser":
        return LatentParserModel(ParserConfig(
            embedding_dim=config.embedding_dim, hidden_dim=config.hidden_dim,
            policy_hidden=config.policy_hidden, dropout=config.dropout, seed=config.seed))
    raise ValueError(f"unknown model kind '{kind}'")


def resolve_datasets(config: TrainConfig):
    """(train, valid, test) examples per the config's data spec.

    Generated test data draws from a disjoint stream of the generator seed;
    without a validation file the last val_fraction of training examples is
    held out.
    """
    if config.train_path is not None:
        train = listops.read_dataset(config.train_path)
        test = listops.read_dataset(config.test_path) if config.test_path else []
        valid = listops.read_dataset(config.valid_path) if config.valid_path else None
    else:
        gen = config.gen
        train = listops.generate(gen)
        test_cfg = listops.GenConfig(
            operator_set=gen.operator_set, max_depth=gen.max_depth, max_args=gen.max_args,
            recursion_p=gen.recursion_p, max_length=gen.max_length,
            size=config.test_size, seed=gen.seed + 988_000_001)
        test = listops.generate(test_cfg)
        valid = None
    if config.subset is not None:
        train = listops.subset(train, config.subset)
    if valid is None:
        n_val = max(1, int(round(len(train) * config.val_fraction)))
        if n_val >= len(train):
            raise ValueError("validation holdout would consume the whole training set")
        train, valid = train[:-n_val], train[-n_val:]
    return train, valid, test


def evaluate(model: Model, dataset) -> float:
    """Fraction of argmax-correct predictions; never mutates parameters."""
    if not dataset:
        raise ValueError("evaluate: empty dataset")
    correct = 0
    with no_grad():
        for ex in dataset:
            correct += model.predict(ex) == ex.label
    return correct / len(dataset)


def mean_parsing_f1(model, dataset, cap: int) -> float:
    """Mean F1 of induced trees against token-level gold constituencies."""
    subset = dataset[:cap] if cap else dataset
    if not subset:
        raise ValueError("mean_parsing_f1: empty dataset")
    with no_grad():
        scores = [parsing_f1(model.induced_tree(ex),
                             listops.token_level_tree(ex.gold_tree))
                  for ex in subset]
    return float(np.mean(scores))


def _snapshot(model: Model) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in model.params.items()}


def _restore(model: Model, snap: dict[str, np.ndarray]) -> None:
    for name, p in model.params.items():
        p.data = snap[name].copy()


def _step_supervised(model, batch, config, dropout_rng) -> float:
    correct = 0
    for ex in batch:
        with recording() as tape:
            loss, pred = model.loss(ex, dropout_rng=dropout_rng)
        backward(tape, loss)
        correct += pred == ex.label
    return correct / len(batch)


def _step_latent(model: LatentParserModel, batch, config: TrainConfig,
                 sample_rng, dropout_rng):
    """Self-critical REINFORCE pass; returns (batch accuracy, stored trajectories)."""
    correct = 0
    stored = []
    for ex in batch:
        greedy = model.greedy_parse(ex.tokens)
        with no_grad():
            greedy_pred = int(np.argmax(model.classify(greedy.root).data))
        greedy_reward = 1.0 if greedy_pred == ex.label else 0.0
        with recording() as tape:
            result = model.sample_parse(ex.tokens, "sample", sample_rng)
            logits = model.classify(result.root, dropout_rng=dropout_rng)
            sampled_pred = int(np.argmax(logits.data))
            sampled_reward = 1.0 if sampled_pred == ex.label else 0.0
            loss = add(cross_entropy_with_logits(logits, ex.label),
                       reinforce_loss(sampled_reward, greedy_reward, result.log_prob,
                                      result.entropy, config.entropy_coef))
        backward(tape, loss)
        correct += sampled_pred == ex.label
        advantage = sampled_reward - greedy_reward
        if config.ppo and advantage != 0.0:
            stored.append((ex.tokens, result.actions, float(result.log_prob.data), advantage))
    return correct / len(batch), stored


def _apply_step(optimizers, params_per_opt, batch_size: int, clip: float) -> None:
    for opt, params in zip(optimizers, params_per_opt):
        for p in params:
            if p.grad is not None:
                p.grad *= 1.0 / batch_size
        clip_global_norm(params, clip)
        opt.step()
        opt.zero_grad()


def _ppo_update(model: LatentParserModel, stored, config: TrainConfig,
                policy_opt) -> None:
    """Clipped-surrogate epochs over the stored batch; policy parameters only."""
    if not stored:
        return
    for _ in range(config.ppo_epochs):
        for tokens, actions, old_lp, advantage in stored:
            with recording() as tape:
                new_lp = model.replay_log_prob(tokens, actions)
                loss = ppo_loss(old_lp, new_lp, advantage, config.ppo_clip)
            if loss.requires_grad:  # a fully clipped surrogate is constant
                backward(tape, loss)
        if not any(p.grad is not None for p in policy_opt.params):
            continue  # every ratio clipped: exact zero gradient, nothing to apply
        for p in policy_opt.params:
            if p.grad is not None:
                p.grad *= 1.0 / len(stored)
        clip_global_norm(policy_opt.params, config.grad_clip)
        policy_opt.step()
        # composition gradients from the replay are discarded, not applied
        for p in model.parameters():
            p.grad = None


def train(config: TrainConfig) -> RunRecord:
    """Run one full training pipeline and return its RunRecord."""
    record, _ = train_with_model(config)
    return record


def train_with_model(config: TrainConfig) -> tuple[RunRecord, Model]:
    """As train(), additionally returning the best-validation model."""
    config.validate()
    started = time.perf_counter()
    train_set, valid_set, test_set = resolve_datasets(config)
    if not train_set or not test_set:
        raise ValueError("train: empty train or test split")
    model = build_model(config)

    if config.model == "latent_parser":
        comp_opt = make_optimizer(config.optimizer, model.composition_parameters(),
                                  config.learning_rate)
        policy_opt = make_optimizer(config.optimizer, model.policy_parameters(),
                                    config.learning_rate)
        optimizers = [comp_opt, policy_opt]
        params_per_opt = [model.composition_parameters(), model.policy_parameters()]
    else:
        optimizers = [make_optimizer(config.optimizer, model.parameters(),
                                     config.learning_rate)]
        params_per_opt = [model.parameters()]
        policy_opt = None

    shuffle_rng = np.random.default_rng([config.seed, 1])
    sample_rng = np.random.default_rng([config.seed, 2])
    dropout_rng = np.random.default_rng([config.seed, 3]) if config.dropout > 0 else None

    record = RunRecord(run_id=config.run_id(), config=config.to_dict())
    best_val = -1.0
    best_snap = _snapshot(model)

    try:
        for epoch in range(config.max_epochs):
            order = shuffle_rng.permutation(len(train_set))
            epoch_accs: list[float] = []
            for start in range(0, len(train_set), config.batch_size):
                batch = [train_set[i] for i in order[start:start + config.batch_size]]
                if config.model == "latent_parser":
                    acc, stored = _step_latent(model, batch, config, sample_rng, dropout_rng)
                else:
                    acc = _step_supervised(model, batch, config, dropout_rng)
                    stored = []
                _apply_step(optimizers, params_per_opt, len(batch), config.grad_clip)
                if stored:
                    _ppo_update(model, stored, config, policy_opt)
                epoch_accs.append(acc)
            record.train_batch_acc.append(epoch_accs)

            val_acc = evaluate(model, valid_set)
            record.val_epoch_acc.append(val_acc)
            if config.model in STRUCTURE_KINDS:
                record.val_epoch_f1.append(
                    mean_parsing_f1(model, valid_set, config.f1_examples))
            if val_acc > best_val:
                best_val = val_acc
                best_snap = _snapshot(model)
                record.best_epoch = epoch
            record.epochs_run = epoch + 1
            if config.early_stop and early_stop_check(record.val_epoch_acc):
                break
    except NumericError as e:
        raise TrainAbort(f"run {record.run_id} aborted at epoch "
                         f"{record.epochs_run}: {e}") from e

    _restore(model, best_snap)
    record.test_acc = evaluate(model, test_set)
    record.wall_minutes = (time.perf_counter() - started) / 60.0
    return record, model
