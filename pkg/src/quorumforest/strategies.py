"""The three explanation scopes: per label, whole labelset, frequent label subsets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .forest import Forest, predict
from .fpm import FrequentItemset, frequent_label_subsets
from .paths import PathSet, extract_all_paths, voting_paths
from .reduce import ReductionConfig, ReductionTrace, quorum, reduce_pipeline
from .rules import Rule, rule_from_paths

PER_LABEL = "label"
ALL = "all"
SUBSETS = "subsets"
KINDS = (PER_LABEL, ALL, SUBSETS)

NO_POSITIVE_LABELS = "no_positive_labels"
NO_ACTIVATED_SUBSETS = "no_activated_subsets"


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = PER_LABEL
    max_subsets: int | None = None
    min_support: float = 0.1
    subset_min_size: int = 2
    reduction: ReductionConfig = field(default_factory=ReductionConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {KINDS}")
        if self.max_subsets is not None and self.max_subsets < 1:
            raise ValueError("max_subsets must be >= 1")
        if not 0 < self.min_support <= 1:
            raise ValueError("min_support must lie in (0, 1]")


@dataclass
class Explanation:
    strategy: str
    rules: list[Rule] = field(default_factory=list)
    traces: list[ReductionTrace] = field(default_factory=list)
    retained: list[PathSet] = field(default_factory=list)
    prediction: np.ndarray | None = None
    quorum: int = 0
    fallback_used: bool = False
    flags: list[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def length(self) -> int:
        return sum(r.length for r in self.rules)

    def to_dict(self, forest: Forest, emit_paths: bool = False) -> dict:
        names = forest.label_names
        out = {
            "strategy": self.strategy,
            "n_trees": forest.n_trees,
            "quorum": self.quorum,
            "prediction": [names[i] for i in np.nonzero(self.prediction)[0]] if self.prediction is not None else [],
            "fallback_used": self.fallback_used,
            "flags": list(self.flags),
            "length": self.length,
            "elapsed_seconds": self.elapsed_seconds,
            "rules": [r.to_dict(forest.space, names) for r in self.rules],
            "traces": [t.to_dict() for t in self.traces],
        }
        if emit_paths:
            fnames = forest.space.names
            out["paths"] = [[p.to_dict(fnames) for p in ps] for ps in self.retained]
        return out

    def to_text(self, forest: Forest) -> str:
        return "\n".join(r.to_text(forest.space, forest.label_names) for r in self.rules)


def _mask(n_labels: int, labels: Sequence[int]) -> np.ndarray:
    m = np.zeros(n_labels, dtype=np.int8)
    m[list(labels)] = 1
    return m


def _explain_mask(forest, instance, all_paths, target, cfg, allow_fallback):
    """Voting paths for ``target`` -> reduction -> rule. Returns (rule, trace, paths, fell_back)."""
    q = quorum(forest.n_trees)
    voters = voting_paths(all_paths, target)
    if len(voters) < q.value:
        if not allow_fallback:
            raise AssertionError(f"{len(voters)} voting paths for a predicted label, below quorum {q.value}")
        # every tree pinned, so the whole forest output is frozen
        trace = ReductionTrace(cfg.reduction.seed, under_quorum=True)
        rule = rule_from_paths(all_paths, instance, forest.space, target)
        return rule, trace, all_paths, True
    kept, trace = reduce_pipeline(voters, q, cfg.reduction)
    return rule_from_paths(kept, instance, forest.space, target), trace, kept, False


def _start(forest, instance, kind):
    x = np.asarray(instance, dtype=float)
    pred = predict(forest, x)
    expl = Explanation(kind, prediction=pred, quorum=quorum(forest.n_trees).value)
    return x, pred, expl


def explain_per_label(forest: Forest, instance, cfg: StrategyConfig | None = None) -> Explanation:
    t0 = time.perf_counter()
    cfg = cfg or StrategyConfig(PER_LABEL)
    x, pred, expl = _start(forest, instance, PER_LABEL)
    if not pred.any():
        expl.flags.append(NO_POSITIVE_LABELS)
    else:
        paths = extract_all_paths(forest, x)
        for lab in np.nonzero(pred)[0]:
            rule, trace, kept, _ = _explain_mask(forest, x, paths, _mask(forest.n_labels, [lab]),
                                                 cfg, allow_fallback=False)
            expl.rules.append(rule)
            expl.traces.append(trace)
            expl.retained.append(kept)
    expl.elapsed_seconds = time.perf_counter() - t0
    return expl


def explain_all(forest: Forest, instance, cfg: StrategyConfig | None = None) -> Explanation:
    t0 = time.perf_counter()
    cfg = cfg or StrategyConfig(ALL)
    x, pred, expl = _start(forest, instance, ALL)
    if not pred.any():
        expl.flags.append(NO_POSITIVE_LABELS)
    else:
        paths = extract_all_paths(forest, x)
        rule, trace, kept, fell_back = _explain_mask(forest, x, paths, pred, cfg, allow_fallback=True)
        expl.rules.append(rule)
        expl.traces.append(trace)
        expl.retained.append(kept)
        expl.fallback_used = fell_back
    expl.elapsed_seconds = time.perf_counter() - t0
    return expl


def activated_subsets(itemsets: Sequence[FrequentItemset], positives, label_names,
                      min_size: int = 2, limit: int | None = None) -> list[FrequentItemset]:
    """Frequent label sets inside the predicted positives, best support first.

    Equal support falls back to larger size, then label names in lexicographic order.
    """
    pos = set(int(i) for i in positives)
    act = [fi for fi in itemsets if len(fi.items) >= min_size and set(fi.items) <= pos]
    act.sort(key=lambda fi: (-fi.count, -len(fi.items), sorted(label_names[i] for i in fi.items)))
    return act if limit is None else act[:limit]


def explain_subsets(forest: Forest, instance, cfg: StrategyConfig | None = None,
                    train_labels=None, itemsets: Sequence[FrequentItemset] | None = None) -> Explanation:
    """One rule per activated frequent label subset.

    Pass ``itemsets`` mined once on the training labels to avoid re-mining per instance.
    """
    t0 = time.perf_counter()
    cfg = cfg or StrategyConfig(SUBSETS)
    if itemsets is None:
        if train_labels is None:
            raise ValueError("need training labels or precomputed itemsets")
        itemsets = frequent_label_subsets(train_labels, cfg.min_support)
    x, pred, expl = _start(forest, instance, SUBSETS)
    if not pred.any():
        expl.flags.append(NO_POSITIVE_LABELS)
    else:
        chosen = activated_subsets(itemsets, np.nonzero(pred)[0], forest.label_names,
                                   cfg.subset_min_size, cfg.max_subsets)
        if not chosen:
            expl.flags.append(NO_ACTIVATED_SUBSETS)
        paths = extract_all_paths(forest, x) if chosen else None
        for fi in chosen:
            rule, trace, kept, fell_back = _explain_mask(
                forest, x, paths, _mask(forest.n_labels, fi.items), cfg, allow_fallback=True)
            expl.rules.append(rule)
            expl.traces.append(trace)
            expl.retained.append(kept)
            expl.fallback_used |= fell_back
    expl.elapsed_seconds = time.perf_counter() - t0
    return expl


def explain(forest: Forest, instance, cfg: StrategyConfig, train_labels=None,
            itemsets=None) -> Explanation:
    if cfg.kind == PER_LABEL:
        return explain_per_label(forest, instance, cfg)
    if cfg.kind == ALL:
        return explain_all(forest, instance, cfg)
    return explain_subsets(forest, instance, cfg, train_labels, itemsets)
