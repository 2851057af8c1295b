"""Generate ListOps-style data, inspect it, and cross-check the two evaluators.

Every example is a bracketed operator expression over digits whose value is
itself a digit. The generator is fully seeded: the same config always yields
byte-identical files.
"""

from treebench import listops as lo

# standard four-operator set (Min/Max/Med/Sum-mod-10)
cfg = lo.GenConfig(operator_set="d20s", max_depth=3, max_args=4,
                   recursion_p=0.4, max_length=40, size=5, seed=42)
examples = lo.generate(cfg)

print("== d20s samples ==")
for ex in examples:
    print(lo.serialize_example(ex))

# the extended set adds First/Last/Product: order-sensitive semantics
cfg5 = lo.GenConfig(operator_set="d5c", max_depth=3, max_args=4,
                    recursion_p=0.4, max_length=40, size=3, seed=7)
print("\n== d5c samples ==")
for ex in lo.generate(cfg5):
    print(lo.serialize_example(ex))

# two independent evaluation paths agree by construction: a recursive walk
# over the parsed tree, and a stack reducer that never builds a tree
ex = examples[0]
tree_value = lo.evaluate_tree(ex.gold_tree)
stream_value = lo.reduce_stream(ex.tokens)
print(f"\nevaluate_tree={tree_value} reduce_stream={stream_value} label={ex.label}")
assert tree_value == stream_value == ex.label

# serialization round-trips exactly
line = lo.serialize_example(ex)
assert lo.parse_line(line) == ex
print("round trip OK:", line[:60], "...")

# determinism: regenerate and compare
again = lo.generate(cfg)
assert [lo.serialize_example(e) for e in again] == [lo.serialize_example(e) for e in examples]
print("same seed, same bytes OK")
