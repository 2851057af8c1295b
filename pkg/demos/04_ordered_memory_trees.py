"""Ordered memory: monotone slot gates, stack discipline, induced trees.

The model keeps M ordered slots. Each step scores a write depth from the
current token, a one-token lookahead, and the slot contents; the cumulative
mask makes a hard gate behave exactly like a stack merge. The per-step slot
distributions double as a parse trace.
"""

import numpy as np

from treebench import listops as lo
from treebench.harness.stats import parsing_f1
from treebench.numcore import no_grad
from treebench.ordered_memory import OMConfig, OrderedMemoryModel, extract_tree

om = OrderedMemoryModel(OMConfig(memory_slots=4, hidden_dim=24, embedding_dim=16, seed=3))

ex = lo.parse_line("5\t[MED 2 [MIN 8 5 ] 9 ]")
with no_grad():
    logits, state = om.run(ex.tokens)
print("tokens:        ", " ".join(ex.tokens))
print("argmax slots:  ", [int(np.argmax(p)) for p in state.gate_trace])
print("logits shape:  ", logits.data.shape)

# the trace reconstructs a binary bracketing (untrained: arbitrary structure)
induced = extract_tree(state.gate_trace, ex.tokens)
gold_tokens = lo.token_level_tree(ex.gold_tree)
print("induced:", lo.to_sexpr(induced))
print("gold:   ", lo.to_sexpr(gold_tokens))
print("parsing F1 vs token-level gold:", round(parsing_f1(induced, gold_tokens), 3))

# hand-built one-hot traces show the depth convention: steadily deeper merges
# produce a fully left-branching tree
M = 4
def one_hot(k):
    p = np.zeros(M)
    p[k] = 1.0
    return p

trace = [one_hot(3), one_hot(3), one_hot(2), one_hot(1), one_hot(0)]
print("constructed trace ->", lo.to_sexpr(extract_tree(trace, list("abcde"))))
