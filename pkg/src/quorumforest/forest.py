"""Multi-output random forest with hard per-label majority voting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, FeatureSpace
from .reduce import quorum

FORMAT_VERSION = 1
LEAF = -1


@dataclass(frozen=True)
class Tree:
    """Flat node arrays. Node 0 is the root; ``feature[i] == -1`` marks a leaf.

    Internal nodes send a value left iff ``value <= threshold``. ``votes`` holds a
    binary labelset for every node, only meaningful at leaves.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    votes: np.ndarray

    def __post_init__(self):
        arrays = dict(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            votes=np.asarray(self.votes, dtype=np.int8).reshape(len(self.feature), -1),
        )
        n = len(arrays["feature"])
        for name, arr in arrays.items():
            if len(arr) != n:
                raise ValueError(f"node array {name!r} has length {len(arr)}, expected {n}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        internal = arrays["feature"] != LEAF
        kids = np.concatenate([arrays["left"][internal], arrays["right"][internal]])
        if ((kids <= 0) | (kids >= n)).any():
            raise ValueError("child index out of range")
        if (arrays["left"][~internal] != LEAF).any() or (arrays["right"][~internal] != LEAF).any():
            raise ValueError("leaves must not have children")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_labels(self) -> int:
        return self.votes.shape[1]

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.is_leaf(node):
                best = max(best, d)
            else:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "votes": self.votes.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["votes"])

    @classmethod
    def leaf(cls, votes) -> "Tree":
        return cls([LEAF], [0.0], [LEAF], [LEAF], [list(votes)])


def tree_predict(tree: Tree, instance) -> np.ndarray:
    node = 0
    x = np.asarray(instance, dtype=float)
    while tree.feature[node] != LEAF:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return tree.votes[node].copy()


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    label_names: tuple[str, ...]
    space: FeatureSpace | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "label_names", tuple(self.label_names))
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        widths = {t.n_labels for t in self.trees}
        if widths != {len(self.label_names)}:
            raise ValueError("trees disagree with the label count")
        if self.space is not None:
            nf = len(self.space)
            for t in self.trees:
                if (t.feature >= nf).any():
                    raise ValueError("tree splits on a feature outside the space")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    @property
    def quorum(self) -> int:
        return quorum(self.n_trees).value

    def vote_matrix(self, X: np.ndarray) -> np.ndarray:
        """Votes as an array of shape (n_rows, n_trees, n_labels)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([t.votes[t.apply(X)] for t in self.trees], axis=1)

    def vote_counts(self, X: np.ndarray) -> np.ndarray:
        return self.vote_matrix(X).sum(axis=1, dtype=np.int64)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return (self.vote_counts(X) >= self.quorum).astype(np.int8)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf ids, shape (n_rows, n_trees)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([t.apply(X) for t in self.trees])

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "labels": list(self.label_names),
            "space": None if self.space is None else self.space.to_dict(),
            "config": dict(self.config),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "Forest":
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported forest format version {d.get('version')!r}")
        space = None if d.get("space") is None else FeatureSpace.from_dict(d["space"])
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), tuple(d["labels"]),
                   space, dict(d.get("config", {})))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str | Path) -> "Forest":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def predict(forest: Forest, instance) -> np.ndarray:
    """Label l is positive iff at least quorum trees vote 1 for it."""
    return forest.predict_many(np.asarray(instance, dtype=float)[None, :])[0]


# ------------------------------------------------------------------ training


def _best_split(X: np.ndarray, Y: np.ndarray, features: np.ndarray):
    """Lowest mean-Gini split over candidate ``features``.

    Thresholds are midpoints of consecutive distinct values; ties go to the lowest
    feature index, then the lowest threshold.
    """
    n = len(X)
    best = (np.inf, -1, 0.0)
    total = Y.sum(axis=0)
    for f in np.sort(features):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cuts = np.nonzero(xs[1:] != xs[:-1])[0]
        if len(cuts) == 0:
            continue
        pos_left = np.cumsum(Y[order], axis=0)[cuts]
        n_left = (cuts + 1)[:, None].astype(float)
        n_right = n - n_left
        pl = pos_left / n_left
        pr = (total - pos_left) / n_right
        # weighted binary gini per label, 2p(1-p), then mean over labels
        imp = (n_left * 2 * pl * (1 - pl) + n_right * 2 * pr * (1 - pr)).mean(axis=1) / n
        k = int(np.argmin(imp))
        if imp[k] < best[0]:
            lo, hi = xs[cuts[k]], xs[cuts[k] + 1]
            thr = (lo + hi) / 2
            if not lo <= thr < hi:
                thr = lo
            best = (float(imp[k]), int(f), float(thr))
    return best


def _gini(Y: np.ndarray) -> float:
    p = Y.mean(axis=0)
    return float((2 * p * (1 - p)).mean())


def _grow(X: np.ndarray, Y: np.ndarray, max_depth: int | None, max_features: int,
          rng: np.random.Generator) -> Tree:
    feature, threshold, left, right, votes = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        # 50/50 votes 0
        votes.append((2 * Y[idx].sum(axis=0) > len(idx)).astype(np.int8))
        return len(feature) - 1

    root = new_node(np.arange(len(X)))
    stack = [(root, np.arange(len(X)), 0)]
    n_features = X.shape[1]
    while stack:
        node, idx, depth = stack.pop()
        if len(idx) < 2 or (max_depth is not None and depth >= max_depth):
            continue
        parent = _gini(Y[idx])
        if parent == 0.0:
            continue
        cand = rng.choice(n_features, size=max_features, replace=False)
        imp, f, thr = _best_split(X[idx], Y[idx], cand)
        if f < 0 or not imp < parent - 1e-12:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree gets the lower node ids
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(feature, threshold, left, right, votes)


def train_forest(ds: Dataset, n_trees: int = 100, max_depth: int | None = None,
                 seed: int = 0, max_features: int | None = None) -> Forest:
    """Bagged multi-output CART; each tree draws from its own seed-derived stream.

    Per-tree streams make the result independent of training order, so trees
    could be grown in parallel without changing the forest.
    """
    if len(ds) == 0:
        raise ValueError("cannot train on an empty dataset")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    n_features = ds.rows.shape[1]
    if max_features is None:
        max_features = math.ceil(math.sqrt(n_features))
    max_features = max(1, min(max_features, n_features))
    X = np.asarray(ds.rows, dtype=float)
    Y = np.asarray(ds.labels, dtype=np.int64)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, len(X), size=len(X))
        trees.append(_grow(X[boot], Y[boot], max_depth, max_features, rng))
    config = {"seed": seed, "n_trees": n_trees, "max_depth": max_depth,
              "max_features": max_features}
    return Forest(tuple(trees), ds.label_names, ds.space, config)
