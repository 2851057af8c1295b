"""ListOps expression generation, parsing and exact evaluation.

Expressions are bracketed operator applications over digits 0-9; every
expression evaluates to a digit (sums and products are reduced mod 10).
Two operator sets are supported: the standard four-operator set and an
extended seven-operator set that adds the order-sensitive First/Last plus
Product.  Evaluation is implemented twice on purpose: a recursive tree
walk and an independent stack reducer that never builds a tree, so the two
can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


class ListOpsError(ValueError):
    """Malformed token sequence or unsatisfiable generator config."""


@dataclass(frozen=True)
class OperatorSpec:
    name: str
    token: str
    min_arity: int
    semantics: str  # MIN | MAX | MED | SUM_MOD | FIRST | LAST | PROD_MOD


MIN = OperatorSpec("min", "[MIN", 1, "MIN")
MAX = OperatorSpec("max", "[MAX", 1, "MAX")
MED = OperatorSpec("med", "[MED", 1, "MED")
SM = OperatorSpec("sum_mod", "[SM", 1, "SUM_MOD")
FIRST = OperatorSpec("first", "[FIRST", 1, "FIRST")
LAST = OperatorSpec("last", "[LAST", 1, "LAST")
PROD = OperatorSpec("prod_mod", "[PROD", 1, "PROD_MOD")

CLOSE = "]"
DIGITS = tuple(str(d) for d in range(10))

OPERATOR_SETS: dict[str, tuple[OperatorSpec, ...]] = {
    "d20s": (MIN, MAX, MED, SM),
    "d5c": (MIN, MAX, MED, SM, FIRST, LAST, PROD),
}

# one fixed vocabulary covers both operator sets
VOCAB: tuple[str, ...] = DIGITS + tuple(op.token for op in OPERATOR_SETS["d5c"]) + (CLOSE,)
TOKEN_TO_ID: dict[str, int] = {tok: i for i, tok in enumerate(VOCAB)}
VOCAB_SIZE = len(VOCAB)

_TOKEN_TO_OP: dict[str, OperatorSpec] = {op.token: op for op in OPERATOR_SETS["d5c"]}


@dataclass(frozen=True)
class TreeNode:
    """Operator application or digit leaf; unlabeled nodes have op=None.

    Leaves carry their surface token (a digit for gold trees, any token for
    induced trees).  Internal nodes of induced binary trees have no operator.
    """

    op: OperatorSpec | None = None
    token: str | None = None
    children: tuple["TreeNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def digit(self) -> int:
        if self.token not in DIGITS:
            raise ListOpsError(f"leaf token {self.token!r} is not a digit")
        return int(self.token)

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        out: list[TreeNode] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)


def leaf(digit: int) -> TreeNode:
    if not 0 <= digit <= 9:
        raise ListOpsError(f"digit {digit} outside 0..9")
    return TreeNode(token=str(digit))


def internal(op: OperatorSpec, children: Iterable[TreeNode]) -> TreeNode:
    kids = tuple(children)
    if not kids:
        raise ListOpsError(f"operator {op.name} applied to zero arguments")
    return TreeNode(op=op, token=op.token, children=kids)


@dataclass(frozen=True)
class Example:
    tokens: tuple[str, ...]
    label: int
    gold_tree: TreeNode


@dataclass(frozen=True)
class GenConfig:
    operator_set: str = "d20s"
    max_depth: int = 20
    max_args: int = 5
    recursion_p: float = 0.25
    max_length: int = 130
    size: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.operator_set not in OPERATOR_SETS:
            raise ListOpsError(f"unknown operator set '{self.operator_set}'")
        if self.max_depth < 1:
            raise ListOpsError("max_depth must be >= 1")
        ops = OPERATOR_SETS[self.operator_set]
        if self.max_args < min(op.min_arity for op in ops):
            raise ListOpsError("max_args below the smallest operator arity")
        if not 0.0 < self.recursion_p < 1.0:
            raise ListOpsError("recursion probability must lie in (0, 1)")
        if self.size < 1:
            raise ListOpsError("size must be >= 1")
        # smallest emittable example is [OP d d ] -> 4 tokens
        if self.max_length < 4:
            raise ListOpsError("max_length below 4 makes generation impossible")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _apply_semantics(semantics: str, values: list[int]) -> int:
    if not values:
        raise ListOpsError("operator applied to empty argument list")
    if semantics == "MIN":
        return min(values)
    if semantics == "MAX":
        return max(values)
    if semantics == "MED":
        ordered = sorted(values)
        n = len(ordered)
        if n % 2 == 1:
            return ordered[n // 2]
        return ((ordered[n // 2 - 1] + ordered[n // 2]) // 2) % 10
    if semantics == "SUM_MOD":
        return sum(values) % 10
    if semantics == "PROD_MOD":
        prod = 1
        for v in values:
            prod = (prod * v) % 10
        return prod
    if semantics == "FIRST":
        return values[0]
    if semantics == "LAST":
        return values[-1]
    raise ListOpsError(f"unknown semantics '{semantics}'")


def evaluate_tree(node: TreeNode) -> int:
    """Recursive exact evaluation of a gold tree; always a digit 0-9."""
    if node.is_leaf:
        return node.digit
    if node.op is None:
        raise ListOpsError("cannot evaluate an unlabeled internal node")
    return _apply_semantics(node.op.semantics, [evaluate_tree(c) for c in node.children])


def reduce_stream(tokens: Iterable[str]) -> int:
    """Left-to-right stack evaluation; never builds a tree.

    Independent of parse_tokens/evaluate_tree so the two paths can
    cross-check each other on generated data.
    """
    stack: list[tuple[OperatorSpec, list[int]]] = []
    result: int | None = None
    for i, tok in enumerate(tokens):
        if result is not None:
            raise ListOpsError(f"trailing token {tok!r} at index {i}")
        if tok in _TOKEN_TO_OP:
            stack.append((_TOKEN_TO_OP[tok], []))
        elif tok == CLOSE:
            if not stack:
                raise ListOpsError(f"unmatched ']' at index {i}")
            op, values = stack.pop()
            if not values:
                raise ListOpsError(f"empty argument list for {op.name} at index {i}")
            value = _apply_semantics(op.semantics, values)
            if stack:
                stack[-1][1].append(value)
            else:
                result = value
        elif tok in DIGITS:
            if not stack:
                result = int(tok)
            else:
                stack[-1][1].append(int(tok))
        else:
            raise ListOpsError(f"unknown token {tok!r} at index {i}")
    if stack:
        raise ListOpsError("unbalanced brackets: sequence ended inside an operator")
    if result is None:
        raise ListOpsError("empty token sequence")
    return result


# ---------------------------------------------------------------------------
# parse / serialize
# ---------------------------------------------------------------------------

def parse_tokens(tokens) -> TreeNode:
    """Parse a token sequence into its unique constituency tree."""
    toks = list(tokens)
    if not toks:
        raise ListOpsError("empty token sequence")

    def parse_at(pos: int) -> tuple[TreeNode, int]:
        tok = toks[pos]
        if tok in DIGITS:
            return TreeNode(token=tok), pos + 1
        if tok in _TOKEN_TO_OP:
            op = _TOKEN_TO_OP[tok]
            children: list[TreeNode] = []
            pos += 1
            while True:
                if pos >= len(toks):
                    raise ListOpsError(f"unbalanced brackets at index {len(toks)}")
                if toks[pos] == CLOSE:
                    if not children:
                        raise ListOpsError(f"empty argument list at index {pos}")
                    return TreeNode(op=op, token=op.token, children=tuple(children)), pos + 1
                child, pos = parse_at(pos)
                children.append(child)
        if tok == CLOSE:
            raise ListOpsError(f"unmatched ']' at index {pos}")
        if tok.isdigit():
            raise ListOpsError(f"digit outside 0..9 at index {pos}: {tok!r}")
        raise ListOpsError(f"unknown token {tok!r} at index {pos}")

    tree, end = parse_at(0)
    if end != len(toks):
        raise ListOpsError(f"trailing token {toks[end]!r} at index {end}")
    return tree


def tree_to_tokens(node: TreeNode) -> list[str]:
    if node.is_leaf:
        return [node.token]
    toks = [node.op.token]
    for c in node.children:
        toks.extend(tree_to_tokens(c))
    toks.append(CLOSE)
    return toks


def serialize_example(example: Example) -> str:
    return f"{example.label}\t{' '.join(example.tokens)}"


def parse_line(line: str, validate: bool = True) -> Example:
    """Read one `label TAB tokens` line, re-deriving the gold tree."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 2:
        raise ListOpsError(f"malformed dataset line: {line!r}")
    label = int(parts[0])
    if not 0 <= label <= 9:
        raise ListOpsError(f"label {label} outside 0..9")
    tokens = tuple(parts[1].split(" "))
    tree = parse_tokens(tokens)
    if validate and evaluate_tree(tree) != label:
        raise ListOpsError(f"label {label} does not match evaluation of {parts[1]!r}")
    return Example(tokens=tokens, label=label, gold_tree=tree)


def token_level_tree(node: TreeNode) -> TreeNode:
    """Re-express a gold tree over the full token sequence.

    Operator and closing-bracket tokens become leaves of their constituent,
    so the result has one leaf per surface token and its spans are token
    spans.  This is the gold side of parsing-F1 against induced trees,
    which always cover every token.
    """
    if node.is_leaf:
        return node
    kids = [TreeNode(token=node.op.token)]
    kids.extend(token_level_tree(c) for c in node.children)
    kids.append(TreeNode(token=CLOSE))
    return TreeNode(op=node.op, token=node.op.token, children=tuple(kids))


def to_sexpr(node: TreeNode) -> str:
    """Bracketed s-expression, one constituent per paren pair."""
    if node.is_leaf:
        return node.token if node.token is not None else "_"
    head = node.op.token if node.op is not None else ""
    parts = [to_sexpr(c) for c in node.children]
    if head:
        return "(" + head + " " + " ".join(parts) + ")"
    return "(" + " ".join(parts) + ")"


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def _gen_tree(rng: np.random.Generator, cfg: GenConfig,
              ops: tuple[OperatorSpec, ...], depth: int) -> TreeNode:
    if depth >= cfg.max_depth or rng.random() >= cfg.recursion_p:
        return TreeNode(token=str(int(rng.integers(0, 10))))
    op = ops[int(rng.integers(0, len(ops)))]
    arity = int(rng.integers(max(2, op.min_arity), cfg.max_args + 1))
    children = tuple(_gen_tree(rng, cfg, ops, depth + 1) for _ in range(arity))
    return TreeNode(op=op, token=op.token, children=children)


def _gen_example(rng: np.random.Generator, cfg: GenConfig,
                 ops: tuple[OperatorSpec, ...]) -> Example:
    while True:
        # the root is always an operator application; leaf-only expressions
        # stay parseable but are never emitted by the generator
        op = ops[int(rng.integers(0, len(ops)))]
        arity = int(rng.integers(max(2, op.min_arity), cfg.max_args + 1))
        children = tuple(_gen_tree(rng, cfg, ops, 1) for _ in range(arity))
        tree = TreeNode(op=op, token=op.token, children=children)
        tokens = tree_to_tokens(tree)
        if len(tokens) <= cfg.max_length:
            return Example(tokens=tuple(tokens), label=evaluate_tree(tree), gold_tree=tree)


def generate(cfg: GenConfig) -> list[Example]:
    """Generate `cfg.size` examples, fully determined by (config, seed).

    Each example draws from its own index-derived stream, so any subrange
    can be regenerated independently.
    """
    cfg.validate()
    ops = OPERATOR_SETS[cfg.operator_set]
    out = []
    for i in range(cfg.size):
        rng = np.random.default_rng([cfg.seed, i])
        out.append(_gen_example(rng, cfg, ops))
    return out


def subset(dataset: list[Example], n: int) -> list[Example]:
    """First n examples in original order."""
    if n > len(dataset):
        raise ListOpsError(f"subset of {n} from dataset of {len(dataset)}")
    return dataset[:n]


def write_dataset(path, examples: Iterable[Example]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(serialize_example(ex) + "\n")


def read_dataset(path, validate: bool = True, limit: int | None = None) -> list[Example]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip() == "":
                continue
            out.append(parse_line(line, validate=validate))
            if limit is not None and len(out) >= limit:
                break
    return out
