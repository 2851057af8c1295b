"""One-way ANOVA over sweep groups and unlabeled parsing F1."""

from __future__ import annotations

import math

from scipy import stats as _scipy_stats

from ..listops import TreeNode


def anova_oneway(groups) -> tuple[float, float]:
    """Between/within mean-square F ratio and its p-value.

    Degenerate inputs (no within-group variance anywhere and equal means)
    define F = 0.  Needs at least two groups with two values each.
    """
    gs = [list(map(float, g)) for g in groups]
    if len(gs) < 2 or any(len(g) < 2 for g in gs):
        raise ValueError("anova_oneway: need >= 2 groups with >= 2 values each")
    n_total = sum(len(g) for g in gs)
    grand = sum(sum(g) for g in gs) / n_total
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in gs)
    ss_within = sum(sum((x - sum(g) / len(g)) ** 2 for x in g) for g in gs)
    df_between = len(gs) - 1
    df_within = n_total - len(gs)
    if ss_within == 0.0:
        if ss_between == 0.0:
            return 0.0, 1.0
        return math.inf, 0.0
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    p_value = float(_scipy_stats.f.sf(f_stat, df_between, df_within))
    return f_stat, p_value


def tree_spans(tree: TreeNode) -> set[tuple[int, int]]:
    """Non-trivial constituent spans: length >= 2, excluding the full span."""
    spans: set[tuple[int, int]] = set()

    def walk(node: TreeNode, start: int) -> int:
        if node.is_leaf:
            return 1
        width = 0
        for child in node.children:
            width += walk(child, start + width)
        if width >= 2:
            spans.add((start, start + width - 1))
        return width

    total = walk(tree, 0)
    spans.discard((0, total - 1))
    return spans


def parsing_f1(induced: TreeNode, gold: TreeNode) -> float:
    """Unlabeled F1 over non-trivial constituent spans of two trees.

    Trees with no non-trivial spans on either side (e.g. two leaves) score
    1.0 by convention; if exactly one side is empty the score is 0.0.
    """
    n_induced = len(induced.leaves())
    n_gold = len(gold.leaves())
    if n_induced != n_gold:
        raise ValueError(f"parsing_f1: leaf counts differ ({n_induced} vs {n_gold})")
    spans_i = tree_spans(induced)
    spans_g = tree_spans(gold)
    if not spans_i and not spans_g:
        return 1.0
    if not spans_i or not spans_g:
        return 0.0
    matched = len(spans_i & spans_g)
    precision = matched / len(spans_i)
    recall = matched / len(spans_g)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
