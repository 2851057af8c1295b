"""Train a gold-tree composer for a couple of epochs and watch it learn.

Gold-tree models read the ground-truth constituency tree and fold each
node's children into a state seeded from the node's own embedding, so they
never see token order beyond the structure.
"""

from treebench.harness import TrainConfig, evaluate, train_with_model
from treebench.listops import GenConfig

cfg = TrainConfig(
    model="tree_lstm",
    gen=GenConfig(operator_set="d20s", max_depth=3, max_args=3,
                  recursion_p=0.45, max_length=40, size=3000, seed=5),
    test_size=500,
    optimizer="adam", learning_rate=2e-3, batch_size=32,
    hidden_dim=32, embedding_dim=16,
    max_epochs=3, early_stop=False, seed=1,
)

record, model = train_with_model(cfg)
print("validation accuracy per epoch:", [round(v, 3) for v in record.val_epoch_acc])
print(f"test accuracy {100 * record.test_acc:.1f}% after {record.epochs_run} epochs "
      f"({record.wall_minutes:.1f} min)")

# the model consumes the tree, not the flat sequence
from treebench import listops as lo

ex = lo.parse_line("5\t[MED 2 [MIN 8 5 ] 9 ]")
shuffled = lo.Example(tokens=tuple(reversed(ex.tokens)), label=ex.label,
                      gold_tree=ex.gold_tree)
assert model.predict(ex) == model.predict(shuffled)
print("prediction depends only on the gold tree: OK")
