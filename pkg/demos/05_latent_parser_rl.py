"""The latent shift-reduce parser and its policy-gradient losses.

A policy samples SHIFT/REDUCE trajectories; REDUCE composes the top two
stack states with the binary tree cell. Training rewards classification
correctness against a self-critical greedy baseline, with entropy
regularization and optional PPO epochs over stored trajectories.
"""

import math

import numpy as np

from treebench import listops as lo
from treebench.latent_parser import LatentParserModel, ParserConfig, ppo_loss, reinforce_loss
from treebench.numcore import Tensor, backward, recording

model = LatentParserModel(ParserConfig(hidden_dim=16, embedding_dim=8,
                                       policy_hidden=8, seed=2))
ex = lo.parse_line("5\t[MED 2 [MIN 8 5 ] 9 ]")
rng = np.random.default_rng(0)

sampled = model.sample_parse(ex.tokens, "sample", rng)
greedy = model.greedy_parse(ex.tokens)
n = len(ex.tokens)
print(f"{n} tokens -> {sampled.actions.count(0)} shifts, {sampled.actions.count(1)} reduces")
print("sampled tree:", lo.to_sexpr(sampled.tree))
print("greedy tree: ", lo.to_sexpr(greedy.tree))
print(f"log p(trajectory) = {float(sampled.log_prob.data):.3f}, "
      f"entropy = {float(sampled.entropy.data):.3f}")

# self-critical surrogate: zero advantage -> zero policy term
loss_eq = reinforce_loss(1.0, 1.0, sampled.log_prob, sampled.entropy, entropy_coef=0.0)
loss_adv = reinforce_loss(1.0, 0.0, sampled.log_prob, sampled.entropy, entropy_coef=0.1)
print(f"loss with zero advantage: {float(loss_eq.data):.3f}; "
      f"with advantage 1: {float(loss_adv.data):.3f}")

# PPO ratios clip exactly: past the band the surrogate is constant
for r, adv in ((1.5, 1.0), (0.5, -2.0), (1.0, 3.0)):
    new_lp = Tensor(np.asarray(math.log(r)), requires_grad=True)
    with recording() as tape:
        loss = ppo_loss(0.0, new_lp, adv, clip_eps=0.2)
    if loss.requires_grad:
        backward(tape, loss)
    grad = float(new_lp.grad[()]) if new_lp.grad is not None else 0.0
    print(f"ratio {r:.1f}, advantage {adv:+.0f}: loss {float(loss.data):+.2f}, "
          f"d loss/d logp {grad:+.3f}")
