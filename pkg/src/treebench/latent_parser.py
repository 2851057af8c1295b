"""Latent-tree shift-reduce parser trained with policy gradients.

A small policy scores SHIFT/REDUCE from the top two stack states and the
next buffer state; REDUCE composes the top two stack entries with the
binary tree cell from `models`.  Training uses REINFORCE with a
self-critical greedy baseline and entropy regularization; PPO-style clipped
updates over stored trajectories are optional and use whole-trajectory
log-probability ratios.

Log-probabilities and entropies stay on the tape via the cross-entropy
primitive: log pi(a) == -CE(logits, a), and H == sum_a p_a * CE(logits, a).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .listops import TreeNode, VOCAB_SIZE
from .models import BinaryTreeCell, CellState, Model, register_model, token_id
from .numcore import (
    NumericError,
    ShapeError,
    Tensor,
    add,
    concat,
    cross_entropy_with_logits,
    exp,
    matmul,
    mul,
    no_grad,
    relu,
    slice_,
    softmax,
    sub,
    sum_,
)

SHIFT = 0
REDUCE = 1


@dataclass(frozen=True)
class ParserConfig:
    tree_cell: str = "tree_lstm"
    vocab_size: int = VOCAB_SIZE
    embedding_dim: int = 32
    hidden_dim: int = 64
    policy_hidden: int = 32
    dropout: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if min(self.vocab_size, self.embedding_dim, self.hidden_dim, self.policy_hidden) < 1:
            raise ValueError("dims must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class RLConfig:
    entropy_coef: float = 0.1
    ppo_enabled: bool = False
    clip_eps: float = 0.2
    ppo_epochs: int = 4
    batch_size: int = 64
    seed: int = 0

    def validate(self) -> None:
        if self.entropy_coef < 0.0:
            raise ValueError("entropy coefficient must be >= 0")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip epsilon must lie in (0, 1)")
        if self.ppo_epochs < 1 or self.batch_size < 1:
            raise ValueError("ppo_epochs and batch_size must be >= 1")


@dataclass
class ParseState:
    """Shift-reduce configuration: remaining buffer, stack, and action log."""

    buffer: list[CellState]
    stack: list[tuple[CellState, TreeNode]]
    action_log: list[tuple[int, float]]

    @property
    def done(self) -> bool:
        return not self.buffer and len(self.stack) == 1


def legal_actions(state: ParseState) -> tuple[bool, bool]:
    """(shift legal, reduce legal); querying a finished parse is an error."""
    if state.done:
        raise ShapeError("legal_actions: parse already complete")
    return (len(state.buffer) > 0, len(state.stack) >= 2)


class ParseResult(NamedTuple):
    root: CellState
    tree: TreeNode
    log_prob: Tensor
    entropy: Tensor
    actions: tuple[int, ...]


class LatentParserModel(Model):
    """Shift-reduce classifier whose tree structure is sampled by a policy."""

    kind = "latent_parser"

    def __init__(self, config: ParserConfig):
        config.validate()
        super().__init__(config)
        h, a = config.hidden_dim, config.policy_hidden
        self.cell = BinaryTreeCell(config.tree_cell, self.store, "tree",
                                   config.embedding_dim, h)
        self.w_p1 = self.store.weight("policy.w1", (a, 3 * h))
        self.b_p1 = self.store.bias("policy.b1", (a,))
        self.w_p2 = self.store.weight("policy.w2", (2, a))
        self.b_p2 = self.store.bias("policy.b2", (2,))
        self._zeros_h = Tensor(np.zeros(h))

    def policy_parameters(self) -> list[Tensor]:
        return [self.w_p1, self.b_p1, self.w_p2, self.b_p2]

    def composition_parameters(self) -> list[Tensor]:
        policy = {id(p) for p in self.policy_parameters()}
        return [p for p in self.parameters() if id(p) not in policy]

    def policy_logits(self, state: ParseState) -> Tensor:
        s1 = state.stack[-1][0].hidden if len(state.stack) >= 1 else self._zeros_h
        s2 = state.stack[-2][0].hidden if len(state.stack) >= 2 else self._zeros_h
        buf = state.buffer[-1].hidden if state.buffer else self._zeros_h
        feat = concat((s2, s1, buf))
        hid = relu(add(matmul(self.w_p1, feat), self.b_p1))
        return add(matmul(self.w_p2, hid), self.b_p2)

    def _leaf_states(self, tokens: Sequence[str]) -> list[CellState]:
        return [self.cell.leaf(self.embed(token_id(t))) for t in tokens]

    def sample_parse(self, tokens: Sequence[str], mode: str = "sample",
                     rng: np.random.Generator | None = None) -> ParseResult:
        """Run the policy to completion; REDUCE composes the top two states.

        Greedy mode takes argmax actions with ties broken toward SHIFT.
        Only free-choice steps (both actions legal) consult the policy; a
        forced action has probability one and contributes nothing to either
        the log-probability or the entropy.
        """
        toks = list(tokens)
        if not toks:
            raise ShapeError("sample_parse: empty token sequence")
        if mode == "sample" and rng is None:
            raise ValueError("sample mode needs an rng")
        leaves = self._leaf_states(toks)
        # buffer is reversed so the next token is at the end
        state = ParseState(buffer=list(reversed(leaves)), stack=[], action_log=[])
        trees = [TreeNode(token=t) for t in toks]
        next_leaf = 0
        log_prob: Tensor = Tensor(np.zeros(()))
        entropy: Tensor = Tensor(np.zeros(()))
        while not state.done:
            can_shift, can_reduce = legal_actions(state)
            step_lp = 0.0
            if can_shift and can_reduce:
                logits = self.policy_logits(state)
                probs = softmax(logits)
                if mode == "greedy":
                    action = SHIFT if probs.data[SHIFT] >= probs.data[REDUCE] else REDUCE
                else:
                    action = SHIFT if rng.random() < probs.data[SHIFT] else REDUCE
                ce_shift = cross_entropy_with_logits(logits, SHIFT)
                ce_reduce = cross_entropy_with_logits(logits, REDUCE)
                neg_lp = ce_shift if action == SHIFT else ce_reduce
                step_lp = -float(neg_lp.data)
                log_prob = sub(log_prob, neg_lp)
                step_ent = add(mul(slice_(probs, 0, 1), ce_shift),
                               mul(slice_(probs, 1, 2), ce_reduce))
                entropy = add(entropy, sum_(step_ent))
            else:
                action = SHIFT if can_shift else REDUCE
            if action == SHIFT:
                state.stack.append((state.buffer.pop(), trees[next_leaf]))
                next_leaf += 1
            else:
                right_state, right_tree = state.stack.pop()
                left_state, left_tree = state.stack.pop()
                state.stack.append((self.cell.compose(left_state, right_state),
                                    TreeNode(children=(left_tree, right_tree))))
            state.action_log.append((action, step_lp))
        root_state, root_tree = state.stack[0]
        return ParseResult(root=root_state, tree=root_tree, log_prob=log_prob,
                           entropy=entropy, actions=tuple(a for a, _ in state.action_log))

    def greedy_parse(self, tokens: Sequence[str]) -> ParseResult:
        with no_grad():
            return self.sample_parse(tokens, mode="greedy")

    def replay_log_prob(self, tokens: Sequence[str], actions: Sequence[int]) -> Tensor:
        """Total log-probability of a stored action sequence under current weights."""
        leaves = self._leaf_states(list(tokens))
        placeholder = TreeNode(token="0")
        state = ParseState(buffer=list(reversed(leaves)), stack=[], action_log=[])
        log_prob: Tensor = Tensor(np.zeros(()))
        for action in actions:
            can_shift, can_reduce = legal_actions(state)
            if (action == SHIFT and not can_shift) or (action == REDUCE and not can_reduce):
                raise ShapeError("replay_log_prob: stored action is illegal here")
            if can_shift and can_reduce:
                logits = self.policy_logits(state)
                log_prob = sub(log_prob, cross_entropy_with_logits(logits, action))
            if action == SHIFT:
                state.stack.append((state.buffer.pop(), placeholder))
            else:
                right_state, _ = state.stack.pop()
                left_state, _ = state.stack.pop()
                state.stack.append((self.cell.compose(left_state, right_state), placeholder))
        if not state.done:
            raise ShapeError("replay_log_prob: stored actions do not complete the parse")
        return log_prob

    def forward_example(self, example, dropout_rng: np.random.Generator | None = None):
        result = self.greedy_parse(example.tokens)
        # re-run classification on the greedy composition under grad if needed
        return self.classify(result.root, dropout_rng=dropout_rng)

    def induced_tree(self, example) -> TreeNode:
        return self.greedy_parse(example.tokens).tree


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def reinforce_loss(sampled_reward: float, greedy_reward: float, log_prob: Tensor,
                   entropy: Tensor, entropy_coef: float) -> Tensor:
    """Self-critical REINFORCE surrogate with entropy regularization.

    loss = -(sampled - greedy) * log_prob - coef * entropy.  Zero advantage
    makes the policy term exactly zero, gradient included.
    """
    advantage = float(sampled_reward) - float(greedy_reward)
    policy_term = mul(log_prob, Tensor(np.asarray(-advantage)))
    entropy_term = mul(entropy, Tensor(np.asarray(-float(entropy_coef))))
    return add(policy_term, entropy_term)


def _ppo_term(old_lp: float, new_lp: Tensor, advantage: float, clip_eps: float) -> Tensor:
    delta = sub(new_lp, Tensor(np.asarray(float(old_lp))))
    try:
        ratio = exp(delta)
    except NumericError as e:
        raise NumericError("ppo_loss: non-finite probability ratio") from e
    r = float(ratio.data)
    unclipped = r * advantage
    clipped = min(max(r, 1.0 - clip_eps), 1.0 + clip_eps) * advantage
    if unclipped <= clipped:
        return mul(ratio, Tensor(np.asarray(-advantage)))
    # clip active: the surrogate is constant, so its gradient is exactly zero
    return Tensor(np.asarray(-clipped))


def ppo_loss(old_log_probs, new_log_probs, advantages, clip_eps: float = 0.2) -> Tensor:
    """Clipped-surrogate loss, averaged over a batch of trajectory ratios.

    Accepts a single trajectory (scalars) or parallel sequences.  Old
    log-probs are plain floats, detached from the current tape by
    construction.
    """
    if not isinstance(old_log_probs, (list, tuple)):
        old_log_probs = [old_log_probs]
        new_log_probs = [new_log_probs]
        advantages = [advantages]
    if not (len(old_log_probs) == len(new_log_probs) == len(advantages)):
        raise ValueError("ppo_loss: mismatched batch lengths")
    if not old_log_probs:
        raise ValueError("ppo_loss: empty batch")
    total = None
    for old, new, adv in zip(old_log_probs, new_log_probs, advantages):
        term = _ppo_term(float(old), new, float(adv), clip_eps)
        total = term if total is None else add(total, term)
    return mul(total, Tensor(np.asarray(1.0 / len(old_log_probs))))


def _build_parser(cfg: dict) -> LatentParserModel:
    return LatentParserModel(ParserConfig(**cfg))


register_model("latent_parser", _build_parser)
