"""Run configuration: one flat dataclass per training run plus the config-file reader.

Config files are flat `key = value` text: keys are dotted paths matching the
CLI surface (`train.model`, `gen.size`), values are scalars or comma lists.
Every CLI flag overrides its file counterpart.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..listops import GenConfig

MODEL_KINDS = ("lstm", "gru", "tree_lstm", "tree_gru", "ordered_memory", "latent_parser")
STRUCTURE_KINDS = ("ordered_memory", "latent_parser")


@dataclass(frozen=True)
class TrainConfig:
    # model
    model: str = "tree_lstm"
    embedding_dim: int = 32
    hidden_dim: int = 64
    memory_slots: int = 4
    gate_temperature: float = 1.0
    slot_bias_init: float = 1.0
    policy_hidden: int = 32
    dropout: float = 0.0
    # optimization
    optimizer: str = "adadelta"
    learning_rate: float | None = None
    batch_size: int = 64
    max_epochs: int = 10
    early_stop: bool = True
    grad_clip: float = 5.0
    # reinforcement learning (latent parser only)
    entropy_coef: float = 0.1
    ppo: bool = False
    ppo_clip: float = 0.2
    ppo_epochs: int = 4
    # data: either explicit files or a generator spec
    train_path: str | None = None
    valid_path: str | None = None
    test_path: str | None = None
    gen: GenConfig | None = None
    test_size: int = 2000
    subset: int | None = None
    val_fraction: float = 0.05
    # bookkeeping
    seed: int = 0
    f1_examples: int = 200

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind '{self.model}'")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.train_path is None and self.gen is None:
            raise ValueError("config needs either train_path or a generator spec")
        if self.gen is not None:
            self.gen.validate()
        if not 0.0 < self.val_fraction < 1.0 and self.valid_path is None:
            raise ValueError("val_fraction must lie in (0, 1) when no valid file is given")

    @property
    def dataset_id(self) -> str:
        if self.train_path is not None:
            stem = Path(self.train_path).stem
            return f"{stem}[:{self.subset}]" if self.subset else stem
        g = self.gen
        base = f"gen-{g.operator_set}-d{g.max_depth}-n{g.size}-s{g.seed}"
        return f"{base}[:{self.subset}]" if self.subset else base

    def run_id(self) -> str:
        return f"{self.model}-{self.dataset_id}-seed{self.seed}"

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        g = d.get("gen")
        if isinstance(g, dict):
            d["gen"] = GenConfig(**g)
        known = {f.name for f in fields(TrainConfig)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return TrainConfig(**d)

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


def _coerce(raw: str):
    text = raw.strip()
    if "," in text:
        return [_coerce(part) for part in text.split(",")]
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config_file(path) -> dict:
    """Flat `key = value` file -> {dotted key: coerced value}."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = stripped.partition("=")
            out[key.strip()] = _coerce(value)
    return out
