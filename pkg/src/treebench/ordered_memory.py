"""Ordered-memory recurrence: stack-like slots under monotone cumulative gates.

A fixed stack of M memory slots (slot 0 deepest) is updated left to right.
At each step a slot distribution is scored from (slot contents, current
token, one-step lookahead) and turned into a monotone cumulative mask, so a
hard one-hot gate at slot k reduces to classic stack behaviour: slots below
k stay untouched, slots at and above k are rewritten through a gated
recursive cell.  The per-step slot distributions are kept as a trace from
which a binary bracketing can be reconstructed.

This is a reconstruction in the spirit of the Ordered Memory model of
Shen et al. (2019), whose exact equations this module does not claim to
match; every structural property (ordered slots, lookahead, gated recursive
cell, induced trees) is preserved and tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .listops import TreeNode, VOCAB_SIZE
from .models import CellState, Model, register_model, token_id
from .numcore import (
    ShapeError,
    Tensor,
    add,
    concat,
    cumulative_sum,
    embedding_lookup,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
)


@dataclass(frozen=True)
class OMConfig:
    memory_slots: int = 4
    hidden_dim: int = 48
    embedding_dim: int = 32
    gate_temperature: float = 1.0
    # initial per-slot score preference: slot k starts at -k * slot_bias_init,
    # so positive values favor deep merges and the model begins life as a
    # recursive-cell recurrence accumulating at the root slot
    slot_bias_init: float = 1.0
    dropout: float = 0.0
    seed: int = 0
    vocab_size: int = VOCAB_SIZE

    def validate(self) -> None:
        if self.memory_slots < 2:
            raise ValueError("memory_slots must be >= 2")
        if min(self.hidden_dim, self.embedding_dim, self.vocab_size) < 1:
            raise ValueError("dims must be >= 1")
        if self.gate_temperature <= 0.0:
            raise ValueError("gate temperature must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass
class OMState:
    """Slot matrix (M, h), the running candidate row, and the gate trace."""

    memory: Tensor
    candidate: Tensor
    gate_trace: tuple[np.ndarray, ...] = ()


class OrderedMemoryModel(Model):
    """Ordered-memory classifier over the flat token sequence.

    Internally works in row convention: token embeddings and slot contents
    are (1, d) rows so the slot matrix can be rebuilt by concatenation.
    """

    kind = "ordered_memory"

    def __init__(self, config: OMConfig):
        config.validate()
        super().__init__(config)
        p = self.store
        h, e, m = config.hidden_dim, config.embedding_dim, config.memory_slots
        a = h  # attention width
        self.eos = p.weight("eos", (1, e), fan_in=e)
        self.w_in = p.weight("w_in", (e, h), fan_in=e)
        self.b_in = p.bias("b_in", (h,))
        self.w_mem = p.weight("gate.w_mem", (h, a), fan_in=h)
        self.w_x = p.weight("gate.w_x", (e, a), fan_in=e)
        self.w_la = p.weight("gate.w_la", (e, a), fan_in=e)
        self.b_a = p.bias("gate.b_a", (a,))
        self.v = p.weight("gate.v", (a,), fan_in=a)
        self.b_slot = p.bias("gate.b_slot", (m,))
        self.b_slot.data[...] = -config.slot_bias_init * np.arange(m)
        self.w_zr = p.weight("cell.w_zr", (2 * h, 2 * h), fan_in=2 * h)
        self.b_zr = p.bias("cell.b_zr", (2 * h,))
        self.w_f1 = p.weight("cell.w_f1", (2 * h, h), fan_in=2 * h)
        self.b_f1 = p.bias("cell.b_f1", (h,))
        self.w_f2 = p.weight("cell.w_f2", (h, h), fan_in=h)
        self.b_f2 = p.bias("cell.b_f2", (h,))
        self._inv_tau = Tensor(np.asarray(1.0 / config.gate_temperature))
        self._ones_col = Tensor(np.ones((m, 1)))
        # constant reversal matrix: gcheck accumulates p from the top slot down
        self._rev = Tensor(np.eye(m)[::-1].copy())
        # sub-diagonal shift: (S v)[k] = v[k-1], (S v)[0] = 0
        self._shift_down = Tensor(np.eye(m, k=-1))

    # -- gates ---------------------------------------------------------------

    def om_gates(self, memory: Tensor, x: Tensor, lookahead: Tensor):
        """Slot distribution and both cumulative masks.

        Returns (p, ghat, gcheck): p is the temperature softmax over slots;
        ghat[k] = sum_{j<=k} p[j] is the overwrite mask (non-decreasing,
        ends at 1); gcheck is the same accumulation taken from the top of
        the stack instead (also non-decreasing, ends at 1).
        """
        ctx = add(add(matmul(x, self.w_x), matmul(lookahead, self.w_la)), self.b_a)
        lin = matmul(memory, self.w_mem)
        scores = add(matmul(tanh(add(lin, ctx)), self.v), self.b_slot)
        p = softmax(mul(scores, self._inv_tau), axis=-1)
        ghat = cumulative_sum(p, axis=-1)
        gcheck = cumulative_sum(matmul(self._rev, p), axis=-1)
        return p, ghat, gcheck

    # -- recursive cell --------------------------------------------------------

    def om_cell(self, slot: Tensor, candidate: Tensor) -> Tensor:
        """Gated two-layer feed-forward combination of (slot, candidate).

        The update gate interpolates between the transform and the raw
        candidate, so a gate driven to zero passes the candidate through.
        Accepts (h,) vectors or (1, h) rows.
        """
        h = self.config.hidden_dim
        axis = slot.data.ndim - 1
        cat = concat((slot, candidate), axis=axis)
        zr = sigmoid(add(matmul(cat, self.w_zr), self.b_zr))
        z = slice_(zr, 0, h, axis=axis)
        r = slice_(zr, h, 2 * h, axis=axis)
        inner = concat((slot, mul(r, candidate)), axis=axis)
        f1 = relu(add(matmul(inner, self.w_f1), self.b_f1))
        hhat = tanh(add(matmul(f1, self.w_f2), self.b_f2))
        return add(candidate, mul(z, sub(hhat, candidate)))

    # -- one step --------------------------------------------------------------

    def om_step(self, state: OMState, x: Tensor, lookahead: Tensor) -> OMState:
        """Blend every slot between kept memory, candidate, and cell output.

        The candidate folds slot contents top-down through the recursive
        cell wherever the merge point lies deeper, so a merge at slot k
        composes everything the closing constituent accumulated above k.
        A one-hot gate at slot k keeps slots below k bit-identical and
        rewrites slots at/above k.
        """
        m = self.config.memory_slots
        p, ghat, _ = self.om_gates(state.memory, x, lookahead)
        # column masks broadcast against the (M, h) slot matrix
        p_col = reshape(p, (m, 1))
        overwrite = reshape(ghat, (m, 1))
        keep = sub(self._ones_col, overwrite)
        # deeper[k] = P(merge strictly below slot k) = ghat[k-1]
        deeper = matmul(self._shift_down, overwrite)

        cand = tanh(add(matmul(x, self.w_in), self.b_in))
        folded_rows: list[Tensor | None] = [None] * m
        cell_rows: list[Tensor | None] = [None] * m
        for k in range(m - 1, -1, -1):
            folded_rows[k] = cand
            slot = slice_(state.memory, k, k + 1, axis=0)
            u_k = self.om_cell(slot, cand)
            cell_rows[k] = u_k
            deep_k = slice_(deeper, k, k + 1, axis=0)
            cand = add(cand, mul(deep_k, sub(u_k, cand)))
        new_memory = add(add(mul(keep, state.memory),
                             mul(p_col, concat(cell_rows, axis=0))),
                         mul(deeper, concat(folded_rows, axis=0)))
        return OMState(memory=new_memory, candidate=cand,
                       gate_trace=state.gate_trace + (p.data.copy(),))

    # -- full sequence -----------------------------------------------------------

    def initial_state(self) -> OMState:
        cfg = self.config
        return OMState(memory=Tensor(np.zeros((cfg.memory_slots, cfg.hidden_dim))),
                       candidate=Tensor(np.zeros((1, cfg.hidden_dim))))

    def run(self, tokens, dropout_rng: np.random.Generator | None = None):
        """Embed, iterate with one-step lookahead, read out the root slot.

        The top of the ordered memory is its deepest slot (slot 0): that is
        where the outermost constituent settles, so the classifier reads it.
        """
        toks = list(tokens)
        if not toks:
            raise ShapeError("run: empty token sequence")
        rows = [embedding_lookup(self.embedding, [token_id(t)]) for t in toks]
        state = self.initial_state()
        n = len(rows)
        for i, x in enumerate(rows):
            lookahead = rows[i + 1] if i + 1 < n else self.eos
            state = self.om_step(state, x, lookahead)
        root = sum_(slice_(state.memory, 0, 1, axis=0), axis=0)
        logits = self.classify(CellState(hidden=root, memory=None), dropout_rng=dropout_rng)
        return logits, state

    def forward_example(self, example, dropout_rng: np.random.Generator | None = None):
        logits, _ = self.run(example.tokens, dropout_rng=dropout_rng)
        return logits

    def induced_tree(self, example) -> TreeNode:
        _, state = self.run(example.tokens)
        return extract_tree(state.gate_trace, example.tokens)


def extract_tree(gate_trace, tokens) -> TreeNode:
    """Greedy depth-split reconstruction of a binary bracketing.

    The argmax slot of each step is read as a merge depth (slot 0 = deepest,
    so lower slots mean stronger boundaries).  The boundary with the highest
    depth splits first; ties split at the leftmost boundary.
    """
    toks = list(tokens)
    trace = list(gate_trace)
    if len(trace) != len(toks):
        raise ShapeError(f"extract_tree: trace length {len(trace)} != token count {len(toks)}")
    if not toks:
        raise ShapeError("extract_tree: empty sequence")
    m = len(trace[0])
    depths = [m - 1 - int(np.argmax(p)) for p in trace]

    def build(lo: int, hi: int) -> TreeNode:
        if lo == hi:
            return TreeNode(token=toks[lo])
        best, best_depth = lo + 1, depths[lo + 1]
        for s in range(lo + 2, hi + 1):
            if depths[s] > best_depth:
                best, best_depth = s, depths[s]
        return TreeNode(children=(build(lo, best - 1), build(best, hi)))

    return build(0, len(toks) - 1)


def _build_om(cfg: dict) -> OrderedMemoryModel:
    return OrderedMemoryModel(OMConfig(**cfg))


register_model("ordered_memory", _build_om)
