"""ListOps generation, parsing, serialization, and the two evaluators."""

import collections

import numpy as np
import pytest

from treebench import listops as lo


def toks(text):
    return text.split(" ")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_evaluate_sum_mod():
    assert lo.evaluate_tree(lo.parse_tokens(toks("[SM 5 6 ]"))) == 1


def test_evaluate_median_nested():
    assert lo.evaluate_tree(lo.parse_tokens(toks("[MED 2 [MIN 8 5 ] 9 ]"))) == 5


def test_evaluate_first_ignores_rest():
    assert lo.evaluate_tree(lo.parse_tokens(toks("[FIRST 7 [MAX 1 2 ] ]"))) == 7


def test_evaluate_last_and_product():
    assert lo.evaluate_tree(lo.parse_tokens(toks("[LAST 7 3 ]"))) == 3
    assert lo.evaluate_tree(lo.parse_tokens(toks("[PROD 7 8 ]"))) == 6


def test_median_even_count_floor_mean_mod_ten():
    # (3 + 6) // 2 = 4
    assert lo.evaluate_tree(lo.parse_tokens(toks("[MED 3 6 9 1 ]"))) == 4
    # (9 + 9) // 2 = 9
    assert lo.evaluate_tree(lo.parse_tokens(toks("[MED 9 9 ]"))) == 9


def test_reduce_stream_basics():
    assert lo.reduce_stream(toks("[MIN 4 7 ]")) == 4
    assert lo.reduce_stream(toks("[SM 9 9 9 ]")) == 7
    assert lo.reduce_stream(["7"]) == 7


def test_reduce_stream_malformed():
    with pytest.raises(lo.ListOpsError):
        lo.reduce_stream(toks("[MIN 4 7"))
    with pytest.raises(lo.ListOpsError):
        lo.reduce_stream(toks("[MIN ]"))
    with pytest.raises(lo.ListOpsError):
        lo.reduce_stream(toks("4 7"))
    with pytest.raises(lo.ListOpsError):
        lo.reduce_stream([])


# ---------------------------------------------------------------------------
# parsing and serialization
# ---------------------------------------------------------------------------

def test_parse_flat():
    tree = lo.parse_tokens(toks("[MAX 1 2 ]"))
    assert tree.op is lo.MAX
    assert [c.digit for c in tree.children] == [1, 2]


def test_parse_single_digit():
    tree = lo.parse_tokens(["7"])
    assert tree.is_leaf and tree.digit == 7


def test_parse_unbalanced_reports_position():
    with pytest.raises(lo.ListOpsError, match="index 3"):
        lo.parse_tokens(toks("[MAX 1 2"))


def test_parse_unknown_and_bad_digit():
    with pytest.raises(lo.ListOpsError, match="unknown token"):
        lo.parse_tokens(toks("[MAX 1 x ]"))
    with pytest.raises(lo.ListOpsError, match="digit outside"):
        lo.parse_tokens(toks("[MAX 1 12 ]"))
    with pytest.raises(lo.ListOpsError, match="trailing"):
        lo.parse_tokens(toks("7 7"))


def test_serialize_example():
    ex = lo.parse_line("1\t[SM 5 6 ]")
    assert lo.serialize_example(ex) == "1\t[SM 5 6 ]"


def test_serialize_leaf_only():
    ex = lo.Example(tokens=("9",), label=9, gold_tree=lo.leaf(9))
    assert lo.serialize_example(ex) == "9\t9"
    back = lo.parse_line(lo.serialize_example(ex))
    assert back == ex


def test_parse_line_validates_label():
    with pytest.raises(lo.ListOpsError):
        lo.parse_line("3\t[SM 5 6 ]")


def test_round_trip_identity_1k():
    cfg = lo.GenConfig(operator_set="d5c", max_depth=3, size=1000, seed=5,
                       recursion_p=0.4, max_length=50)
    for ex in lo.generate(cfg):
        line = lo.serialize_example(ex)
        back = lo.parse_line(line)
        assert back.tokens == ex.tokens
        assert back.label == ex.label
        assert back.gold_tree == ex.gold_tree
        assert lo.serialize_example(back) == line


def test_tree_tokens_inverse_of_parse():
    tree = lo.parse_tokens(toks("[MED 2 [MIN 8 5 ] 9 ]"))
    assert lo.tree_to_tokens(tree) == toks("[MED 2 [MIN 8 5 ] 9 ]")


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def test_generate_deterministic():
    cfg = lo.GenConfig(size=50, seed=9)
    a = lo.generate(cfg)
    b = lo.generate(cfg)
    assert [lo.serialize_example(x) for x in a] == [lo.serialize_example(x) for x in b]


def test_generate_depth_one_is_flat():
    cfg = lo.GenConfig(max_depth=1, size=100, seed=2)
    for ex in lo.generate(cfg):
        tree = ex.gold_tree
        assert tree.is_leaf or all(c.is_leaf for c in tree.children)


def test_generate_respects_caps():
    cfg = lo.GenConfig(max_depth=3, size=300, seed=4, max_length=25, recursion_p=0.45)
    for ex in lo.generate(cfg):
        assert len(ex.tokens) <= 25
        assert ex.gold_tree.depth() <= 3


def test_generate_labels_cover_all_digits():
    cfg = lo.GenConfig(size=2000, seed=1)
    hist = collections.Counter(ex.label for ex in lo.generate(cfg))
    assert set(hist) == set(range(10))


def test_generate_impossible_config():
    with pytest.raises(lo.ListOpsError):
        lo.generate(lo.GenConfig(max_length=3, size=1, seed=0))


def test_generate_uses_only_active_operator_set():
    cfg = lo.GenConfig(operator_set="d20s", size=200, seed=6)
    allowed = {op.token for op in lo.OPERATOR_SETS["d20s"]} | set(lo.DIGITS) | {lo.CLOSE}
    for ex in lo.generate(cfg):
        assert set(ex.tokens) <= allowed


def test_subset_semantics():
    ds = lo.generate(lo.GenConfig(size=30, seed=3))
    assert lo.subset(ds, 30) == ds
    assert lo.subset(ds, 0) == []
    assert lo.subset(ds, 10) == ds[:10]
    with pytest.raises(lo.ListOpsError):
        lo.subset(ds, 31)


def test_dataset_file_round_trip(tmp_path):
    ds = lo.generate(lo.GenConfig(size=40, seed=8, operator_set="d5c"))
    path = tmp_path / "data.tsv"
    lo.write_dataset(path, ds)
    text = path.read_bytes()
    assert b"\r" not in text  # LF only
    back = lo.read_dataset(path)
    assert back == ds
    head = lo.read_dataset(path, limit=7)
    assert head == ds[:7]


def test_ingested_file_matches_subset_head(tmp_path):
    ds = lo.generate(lo.GenConfig(size=60, seed=12))
    path = tmp_path / "big.tsv"
    lo.write_dataset(path, ds)
    first = lo.read_dataset(path, limit=20)
    assert first == lo.subset(ds, 20)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def test_dual_oracle_equivalence_sampled():
    for opset in ("d20s", "d5c"):
        cfg = lo.GenConfig(operator_set=opset, max_depth=6, size=800, seed=13,
                           recursion_p=0.4, max_length=80)
        for ex in lo.generate(cfg):
            assert lo.reduce_stream(ex.tokens) == lo.evaluate_tree(ex.gold_tree) == ex.label


def test_balanced_brackets_always():
    cfg = lo.GenConfig(size=500, seed=14, recursion_p=0.45)
    for ex in lo.generate(cfg):
        depth = 0
        for tok in ex.tokens:
            if tok.startswith("["):
                depth += 1
            elif tok == lo.CLOSE:
                depth -= 1
            assert depth >= 0
        assert depth == 0


def test_permutation_invariance_and_order_sensitivity():
    rng = np.random.default_rng(15)
    values = [int(d) for d in rng.integers(0, 10, 5)]
    for op in (lo.MIN, lo.MAX, lo.MED, lo.SM, lo.PROD):
        base = lo.evaluate_tree(lo.internal(op, [lo.leaf(v) for v in values]))
        for _ in range(10):
            perm = list(rng.permutation(values))
            assert lo.evaluate_tree(lo.internal(op, [lo.leaf(int(v)) for v in perm])) == base
    # FIRST/LAST: a concrete witness pair where order changes the answer
    a, b = lo.leaf(3), lo.leaf(8)
    assert lo.evaluate_tree(lo.internal(lo.FIRST, [a, b])) == 3
    assert lo.evaluate_tree(lo.internal(lo.FIRST, [b, a])) == 8
    assert lo.evaluate_tree(lo.internal(lo.LAST, [a, b])) == 8
    assert lo.evaluate_tree(lo.internal(lo.LAST, [b, a])) == 3


def test_token_level_tree_covers_all_tokens():
    ex = lo.parse_line("5\t[MED 2 [MIN 8 5 ] 9 ]")
    tl = lo.token_level_tree(ex.gold_tree)
    assert [n.token for n in tl.leaves()] == list(ex.tokens)


def test_to_sexpr():
    ex = lo.parse_line("1\t[SM 5 6 ]")
    assert lo.to_sexpr(ex.gold_tree) == "([SM 5 6)"
    induced = lo.TreeNode(children=(lo.TreeNode(token="a"), lo.TreeNode(token="b")))
    assert lo.to_sexpr(induced) == "(a b)"
