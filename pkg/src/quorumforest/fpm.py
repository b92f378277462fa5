"""Frequent itemset mining with FP-growth."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class FrequentItemset:
    items: tuple
    support: float
    count: int

    def __len__(self) -> int:
        return len(self.items)


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}


def _build(weighted: Iterable[tuple[Sequence, int]], keep: dict) -> dict:
    """Insert transactions into a fresh FP-tree; returns the header table."""
    root = _Node(None, None)
    header: dict = defaultdict(list)
    # items sorted by global count desc, then by item for determinism
    rank = {it: r for r, it in enumerate(sorted(keep, key=lambda i: (-keep[i], i)))}
    for items, w in weighted:
        node = root
        for it in sorted((i for i in items if i in rank), key=rank.__getitem__):
            child = node.children.get(it)
            if child is None:
                child = node.children[it] = _Node(it, node)
                header[it].append(child)
            child.count += w
            node = child
    return header


def _mine(header: dict, suffix: tuple, min_count_ok, out: list) -> None:
    totals = {it: sum(n.count for n in nodes) for it, nodes in header.items()}
    for it in sorted(totals, key=lambda i: (totals[i], i)):
        itemset = suffix + (it,)
        out.append((itemset, totals[it]))
        base = []
        for node in header[it]:
            path = []
            p = node.parent
            while p.item is not None:
                path.append(p.item)
                p = p.parent
            if path:
                base.append((path, node.count))
        counts: dict = defaultdict(int)
        for path, w in base:
            for p in path:
                counts[p] += w
        keep = {i: c for i, c in counts.items() if min_count_ok(c)}
        if keep:
            _mine(_build(base, keep), itemset, min_count_ok, out)


def fpgrowth(transactions: Sequence[Iterable[Hashable]], min_support: float) -> list[FrequentItemset]:
    """All itemsets with support >= ``min_support``.

    Sorted by support desc, size desc, then items ascending.
    """
    if not 0 < min_support <= 1:
        raise ValueError(f"min_support must lie in (0, 1], got {min_support}")
    txns = [frozenset(t) for t in transactions]
    if not txns:
        raise ValueError("no transactions")
    n = len(txns)

    def ok(count: int) -> bool:
        return count / n >= min_support

    counts: dict = defaultdict(int)
    for t in txns:
        for it in t:
            counts[it] += 1
    keep = {i: c for i, c in counts.items() if ok(c)}
    found: list = []
    if keep:
        _mine(_build(((t, 1) for t in txns), keep), (), ok, found)
    result = [FrequentItemset(tuple(sorted(items)), c / n, c) for items, c in found]
    result.sort(key=lambda f: (-f.count, -len(f.items), f.items))
    return result


def frequent_label_subsets(train_labels, min_support: float = 0.1,
                           min_size: int = 1) -> list[FrequentItemset]:
    """FP-growth over the positive-label indices of each training row."""
    Y = np.asarray(train_labels)
    if Y.ndim != 2 or len(Y) == 0:
        raise ValueError("label matrix must be 2-D and nonempty")
    txns = [tuple(int(j) for j in np.nonzero(row)[0]) for row in Y]
    found = fpgrowth(txns, min_support)
    return [f for f in found if len(f.items) >= min_size]
