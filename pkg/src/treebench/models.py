"""Token embeddings, recurrent baselines, and gold-tree recursive cells.

Sequential models (LSTM/GRU) read the flat token sequence; gold-tree models
(tree-LSTM/tree-GRU) recursively compose the ground-truth constituency tree.
Variable-arity nodes are handled by a left-fold of a binary composer seeded
from the node's own embedding, which keeps composition order-sensitive (a
child-sum cell could never represent First/Last).  The binary tree-LSTM
follows Tai et al. (2015); the tree-GRU treats one operand as the previous
state and a projection of the other as the input of a standard GRU update.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .listops import TOKEN_TO_ID, VOCAB_SIZE, Example, TreeNode
from .numcore import (
    ShapeError,
    Tensor,
    add,
    concat,
    cross_entropy_with_logits,
    embedding_lookup,
    matmul,
    mul,
    sigmoid,
    slice_,
    sub,
    tanh,
    uniform_param,
    zeros_param,
)

SEQUENTIAL_KINDS = ("lstm", "gru")
TREE_KINDS = ("tree_lstm", "tree_gru")


@dataclass(frozen=True)
class ModelConfig:
    cell: str = "tree_lstm"
    vocab_size: int = VOCAB_SIZE
    embedding_dim: int = 32
    hidden_dim: int = 64
    dropout: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.cell not in SEQUENTIAL_KINDS + TREE_KINDS:
            raise ValueError(f"unknown cell kind '{self.cell}'")
        if min(self.vocab_size, self.embedding_dim, self.hidden_dim) < 1:
            raise ValueError("dims must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


class CellState(NamedTuple):
    """Hidden vector plus the LSTM-family memory cell (None for GRU-family)."""

    hidden: Tensor
    memory: Tensor | None


def token_id(token: str) -> int:
    tid = TOKEN_TO_ID.get(token)
    if tid is None:
        raise ShapeError(f"token {token!r} not in vocabulary")
    return tid


class ParamSet:
    """Ordered named parameters with seeded fan-in uniform init."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng([seed, 0])
        self.params: dict[str, Tensor] = {}

    def weight(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> Tensor:
        p = uniform_param(self.rng, shape, fan_in=fan_in)
        self.params[name] = p
        return p

    def bias(self, name: str, shape: tuple[int, ...]) -> Tensor:
        p = zeros_param(shape)
        self.params[name] = p
        return p


class Model:
    """Base: named parameters, classification head, checkpoint round-trip."""

    kind = "base"

    def __init__(self, config):
        self.config = config
        self.store = ParamSet(config.seed)
        p = self.store
        h = config.hidden_dim
        self.embedding = p.weight("embedding", (config.vocab_size, config.embedding_dim),
                                  fan_in=config.embedding_dim)
        self.w_out = p.weight("w_out", (10, h))
        self.b_out = p.bias("b_out", (10,))

    @property
    def params(self) -> dict[str, Tensor]:
        return self.store.params

    def parameters(self) -> list[Tensor]:
        return list(self.store.params.values())

    def embed(self, tid: int) -> Tensor:
        return embedding_lookup(self.embedding, tid)

    def classify(self, state: CellState, dropout_rng: np.random.Generator | None = None) -> Tensor:
        """Affine map of the hidden state to 10 logits.

        Dropout (inverted, classifier input only) is applied when a dropout
        rng is supplied and the configured rate is positive.
        """
        h = state.hidden
        rate = self.config.dropout
        if dropout_rng is not None and rate > 0.0:
            mask = (dropout_rng.random(h.data.shape) >= rate) / (1.0 - rate)
            h = mul(h, Tensor(mask))
        return add(matmul(self.w_out, h), self.b_out)

    def forward_example(self, example: Example,
                        dropout_rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError

    def predict(self, example: Example) -> int:
        # ties break toward the lowest class index (np.argmax takes the first max)
        return int(np.argmax(self.forward_example(example).data))

    def loss(self, example: Example,
             dropout_rng: np.random.Generator | None = None) -> tuple[Tensor, int]:
        logits = self.forward_example(example, dropout_rng=dropout_rng)
        return cross_entropy_with_logits(logits, example.label), int(np.argmax(logits.data))


# ---------------------------------------------------------------------------
# step cells (sequential)
# ---------------------------------------------------------------------------

class LSTMCell:
    """Standard LSTM step; the four gates come from one fused projection."""

    def __init__(self, store: ParamSet, prefix: str, in_dim: int, hidden_dim: int):
        self.h = hidden_dim
        self.w_x = store.weight(f"{prefix}.w_x", (4 * hidden_dim, in_dim))
        self.w_h = store.weight(f"{prefix}.w_h", (4 * hidden_dim, hidden_dim))
        self.b = store.bias(f"{prefix}.b", (4 * hidden_dim,))
        # forget gate opens at init: standard trick for trainable memory cells
        self.b.data[hidden_dim:2 * hidden_dim] = 1.0

    def step(self, state: CellState, x: Tensor) -> CellState:
        h = self.h
        pre = add(add(matmul(self.w_x, x), matmul(self.w_h, state.hidden)), self.b)
        gates = sigmoid(slice_(pre, 0, 3 * h))
        i = slice_(gates, 0, h)
        f = slice_(gates, h, 2 * h)
        o = slice_(gates, 2 * h, 3 * h)
        u = tanh(slice_(pre, 3 * h, 4 * h))
        c = add(mul(f, state.memory), mul(i, u))
        return CellState(hidden=mul(o, tanh(c)), memory=c)


class GRUCell:
    """Standard GRU step; update gate z scales how much new state enters."""

    def __init__(self, store: ParamSet, prefix: str, in_dim: int, hidden_dim: int):
        self.h = hidden_dim
        self.w_zr_x = store.weight(f"{prefix}.w_zr_x", (2 * hidden_dim, in_dim))
        self.w_zr_h = store.weight(f"{prefix}.w_zr_h", (2 * hidden_dim, hidden_dim))
        self.b_zr = store.bias(f"{prefix}.b_zr", (2 * hidden_dim,))
        self.w_c_x = store.weight(f"{prefix}.w_c_x", (hidden_dim, in_dim))
        self.w_c_h = store.weight(f"{prefix}.w_c_h", (hidden_dim, hidden_dim))
        self.b_c = store.bias(f"{prefix}.b_c", (hidden_dim,))

    def step(self, state: CellState, x: Tensor) -> CellState:
        h = self.h
        zr = sigmoid(add(add(matmul(self.w_zr_x, x), matmul(self.w_zr_h, state.hidden)),
                         self.b_zr))
        z = slice_(zr, 0, h)
        r = slice_(zr, h, 2 * h)
        cand = tanh(add(add(matmul(self.w_c_x, x), matmul(self.w_c_h, mul(r, state.hidden))),
                        self.b_c))
        # h' = h + z * (cand - h): z -> 0 keeps the state exactly
        new_h = add(state.hidden, mul(z, sub(cand, state.hidden)))
        return CellState(hidden=new_h, memory=None)


class SequentialModel(Model):
    """Left-to-right recurrent classifier over the raw token sequence."""

    def __init__(self, config: ModelConfig):
        config.validate()
        if config.cell not in SEQUENTIAL_KINDS:
            raise ValueError(f"SequentialModel cannot use cell '{config.cell}'")
        super().__init__(config)
        self.kind = config.cell
        cls = LSTMCell if config.cell == "lstm" else GRUCell
        self.cell = cls(self.store, "cell", config.embedding_dim, config.hidden_dim)

    def zero_state(self) -> CellState:
        h = Tensor(np.zeros(self.config.hidden_dim))
        mem = Tensor(np.zeros(self.config.hidden_dim)) if self.config.cell == "lstm" else None
        return CellState(hidden=h, memory=mem)

    def step(self, state: CellState, x: Tensor) -> CellState:
        return self.cell.step(state, x)

    def forward_example(self, example: Example,
                        dropout_rng: np.random.Generator | None = None) -> Tensor:
        state = self.zero_state()
        for tok in example.tokens:
            state = self.cell.step(state, self.embed(token_id(tok)))
        return self.classify(state, dropout_rng=dropout_rng)


# ---------------------------------------------------------------------------
# binary tree composers
# ---------------------------------------------------------------------------

class BinaryTreeCell:
    """Binary composition cell shared by gold-tree models and the latent parser.

    tree_lstm: binary tree-LSTM with per-child forget gates.
    tree_gru: GRU update where the left operand is the previous state and a
    learned projection of the right operand is the input.
    """

    def __init__(self, kind: str, store: ParamSet, prefix: str,
                 embedding_dim: int, hidden_dim: int):
        if kind not in TREE_KINDS:
            raise ValueError(f"unknown tree cell kind '{kind}'")
        self.kind = kind
        self.h = hidden_dim
        h = hidden_dim
        if kind == "tree_lstm":
            # i, f_left, f_right, o, u from one projection of [h_l; h_r]
            self.w_g = store.weight(f"{prefix}.w_g", (5 * h, 2 * h))
            self.b_g = store.bias(f"{prefix}.b_g", (5 * h,))
            self.b_g.data[h:3 * h] = 1.0  # both forget gates open at init
            self.w_leaf = store.weight(f"{prefix}.w_leaf", (2 * h, embedding_dim))
            self.b_leaf = store.bias(f"{prefix}.b_leaf", (2 * h,))
        else:
            self.w_proj = store.weight(f"{prefix}.w_proj", (h, h))
            self.b_proj = store.bias(f"{prefix}.b_proj", (h,))
            self.gru = GRUCell(store, f"{prefix}.gru", h, h)
            self.w_leaf = store.weight(f"{prefix}.w_leaf", (h, embedding_dim))
            self.b_leaf = store.bias(f"{prefix}.b_leaf", (h,))

    def leaf(self, emb: Tensor) -> CellState:
        pre = add(matmul(self.w_leaf, emb), self.b_leaf)
        if self.kind == "tree_lstm":
            h = self.h
            return CellState(hidden=tanh(slice_(pre, 0, h)), memory=slice_(pre, h, 2 * h))
        return CellState(hidden=tanh(pre), memory=None)

    def compose(self, left: CellState, right: CellState) -> CellState:
        if self.kind == "tree_gru":
            x = add(matmul(self.w_proj, right.hidden), self.b_proj)
            return self.gru.step(left, x)
        h = self.h
        pre = add(matmul(self.w_g, concat((left.hidden, right.hidden))), self.b_g)
        gates = sigmoid(slice_(pre, 0, 4 * h))
        i = slice_(gates, 0, h)
        f_l = slice_(gates, h, 2 * h)
        f_r = slice_(gates, 2 * h, 3 * h)
        o = slice_(gates, 3 * h, 4 * h)
        u = tanh(slice_(pre, 4 * h, 5 * h))
        c = add(add(mul(i, u), mul(f_l, left.memory)), mul(f_r, right.memory))
        return CellState(hidden=mul(o, tanh(c)), memory=c)


class GoldTreeModel(Model):
    """Recursive classifier over the ground-truth constituency tree."""

    def __init__(self, config: ModelConfig):
        config.validate()
        if config.cell not in TREE_KINDS:
            raise ValueError(f"GoldTreeModel cannot use cell '{config.cell}'")
        super().__init__(config)
        self.kind = config.cell
        self.cell = BinaryTreeCell(config.cell, self.store, "tree",
                                   config.embedding_dim, config.hidden_dim)

    def tree_compose(self, children: list[CellState], node_emb: Tensor) -> CellState:
        """Left-fold the children into a state seeded from the node embedding."""
        if not children:
            raise ShapeError("tree_compose: empty child list")
        state = self.cell.leaf(node_emb)
        for child in children:
            state = self.cell.compose(state, child)
        return state

    def encode_tree(self, node: TreeNode) -> CellState:
        if node.is_leaf:
            return self.cell.leaf(self.embed(token_id(node.token)))
        children = [self.encode_tree(c) for c in node.children]
        return self.tree_compose(children, self.embed(token_id(node.op.token)))

    def forward_example(self, example: Example,
                        dropout_rng: np.random.Generator | None = None) -> Tensor:
        return self.classify(self.encode_tree(example.gold_tree), dropout_rng=dropout_rng)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

MODEL_REGISTRY: dict[str, Callable[[dict], "Model"]] = {}


def register_model(kind: str, builder: Callable[[dict], "Model"]) -> None:
    MODEL_REGISTRY[kind] = builder


def _build_standard(kind: str):
    def build(cfg: dict) -> Model:
        config = ModelConfig(**cfg)
        if kind in SEQUENTIAL_KINDS:
            return SequentialModel(config)
        return GoldTreeModel(config)
    return build


for _kind in SEQUENTIAL_KINDS + TREE_KINDS:
    register_model(_kind, _build_standard(_kind))


CHECKPOINT_FORMAT = "treebench-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, model: Model) -> None:
    """Versioned npz container: JSON meta blob plus named parameter arrays."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "config": asdict(model.config),
    }
    blob = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    arrays = {f"param:{name}": p.data for name, p in model.params.items()}
    np.savez(path, meta=blob, **arrays)


def load_checkpoint(path) -> Model:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(bytes(z["meta"].tobytes()).decode("utf-8"))
        if meta.get("format") != CHECKPOINT_FORMAT or meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"not a recognized checkpoint: {path}")
        builder = MODEL_REGISTRY.get(meta["kind"])
        if builder is None:
            raise ValueError(f"unknown model kind '{meta['kind']}' in checkpoint")
        model = builder(meta["config"])
        for name, p in model.params.items():
            arr = z[f"param:{name}"]
            if arr.shape != p.data.shape:
                raise ValueError(f"checkpoint parameter {name} has shape {arr.shape}, "
                                 f"expected {p.data.shape}")
            p.data = arr.astype(np.float64)
    return model
