"""Decision paths: the root-to-leaf comparisons a tree used for one instance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LE = "<="
GT = ">"


@dataclass(frozen=True)
class Condition:
    feature: int
    op: str
    threshold: float

    def holds(self, x) -> bool:
        v = x[self.feature]
        return v <= self.threshold if self.op == LE else v > self.threshold

    def to_dict(self) -> dict:
        return {"feature": self.feature, "op": self.op, "threshold": self.threshold}


@dataclass(frozen=True)
class DecisionPath:
    tree_id: int
    conditions: tuple[Condition, ...]
    votes: tuple[int, ...]
    leaf: int = -1

    @property
    def features(self) -> frozenset[int]:
        return frozenset(c.feature for c in self.conditions)

    def covers(self, x) -> bool:
        return all(c.holds(x) for c in self.conditions)

    def interval(self, feature: int, lower: float = -np.inf, upper: float = np.inf):
        """(lo, lo_open, hi) implied by this path's conditions on ``feature``."""
        lo, hi = lower, upper
        lo_open = False
        for c in self.conditions:
            if c.feature != feature:
                continue
            if c.op == LE:
                hi = min(hi, c.threshold)
            elif c.threshold >= lo:
                lo, lo_open = c.threshold, True
        return lo, lo_open, hi

    def to_dict(self, names=None) -> dict:
        conds = [c.to_dict() for c in self.conditions]
        if names is not None:
            for c in conds:
                c["name"] = names[c["feature"]]
        return {"tree": self.tree_id, "leaf": self.leaf, "conditions": conds,
                "votes": list(self.votes)}


@dataclass(frozen=True)
class PathSet:
    paths: tuple[DecisionPath, ...]
    source_size: int

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        ids = [p.tree_id for p in self.paths]
        if len(set(ids)) != len(ids):
            raise ValueError("a path set holds at most one path per tree")

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    @property
    def tree_ids(self) -> list[int]:
        return [p.tree_id for p in self.paths]

    def feature_union(self) -> frozenset[int]:
        out: set[int] = set()
        for p in self.paths:
            out |= p.features
        return frozenset(out)

    def keep(self, positions) -> "PathSet":
        """Sub-PathSet of the given positions, kept in original order."""
        chosen = sorted(set(int(i) for i in positions))
        return PathSet(tuple(self.paths[i] for i in chosen), self.source_size)


def extract_path(tree, instance, tree_id: int = 0) -> DecisionPath:
    x = np.asarray(instance, dtype=float)
    node = 0
    conds = []
    while tree.feature[node] != -1:
        f = int(tree.feature[node])
        t = float(tree.threshold[node])
        if x[f] <= t:
            conds.append(Condition(f, LE, t))
            node = tree.left[node]
        else:
            conds.append(Condition(f, GT, t))
            node = tree.right[node]
    return DecisionPath(tree_id, tuple(conds), tuple(int(v) for v in tree.votes[node]), int(node))


def extract_all_paths(forest, instance) -> PathSet:
    return PathSet(tuple(extract_path(t, instance, i) for i, t in enumerate(forest.trees)),
                   forest.n_trees)


def voting_paths(ps: PathSet, target) -> PathSet:
    """Paths whose leaf votes 1 for every label marked in ``target``."""
    mask = np.asarray(target, dtype=bool)
    if not mask.any():
        raise ValueError("target must mark at least one label")
    keep = [p for p in ps if all(v == 1 for v, m in zip(p.votes, mask) if m)]
    return PathSet(tuple(keep), ps.source_size)
