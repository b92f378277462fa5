"""Rule metrics (length, coverage, precision, time) under k-fold cross-validation."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset
from .forest import Forest, train_forest
from .fpm import frequent_label_subsets
from .rules import Rule, check_conclusiveness
from .strategies import Explanation, StrategyConfig, explain

CSV_COLUMNS = ("strategy", "L_mean", "L_std", "C_mean", "C_std", "P_mean", "P_std", "T_mean", "T_std")
DISPLAY = {"all": "LF-a", "label": "LF-l", "subsets": "LF-p"}

CONSEQUENT = "consequent"
LABELSET = "labelset"


def rule_length(expl: Explanation) -> int:
    return sum(r.length for r in expl.rules)


def rule_coverage(rule: Rule, eval_set: Dataset) -> float:
    if len(eval_set) == 0:
        raise ValueError("empty evaluation set")
    return float(rule.satisfied_by(eval_set.rows, eval_set.space).mean())


def coverage(expl: Explanation | Rule, eval_set: Dataset) -> float:
    """Fraction of rows a rule satisfies; mean over rules for multi-rule explanations."""
    if isinstance(expl, Rule):
        return rule_coverage(expl, eval_set)
    if not expl.rules:
        return 0.0
    return float(np.mean([rule_coverage(r, eval_set) for r in expl.rules]))


def rule_precision(rule: Rule, forest: Forest, eval_set: Dataset, mode: str = CONSEQUENT,
                   predictions: np.ndarray | None = None) -> tuple[float, bool]:
    """(precision, zero_coverage). Zero-coverage rules report 1.0 and set the flag.

    ``consequent`` mode counts a covered row as correct when the forest predicts
    every consequent label; ``labelset`` mode needs the full predicted labelset
    to equal the consequent.
    """
    covered = rule.satisfied_by(eval_set.rows, eval_set.space)
    if not covered.any():
        return 1.0, True
    pred = predictions if predictions is not None else forest.predict_many(eval_set.rows)
    pred = pred[covered]
    if mode == CONSEQUENT:
        good = pred[:, rule.labels].all(axis=1)
    elif mode == LABELSET:
        good = (pred == np.asarray(rule.consequent)).all(axis=1)
    else:
        raise ValueError(f"unknown precision mode {mode!r}")
    return float(good.mean()), False


def precision(expl: Explanation | Rule, forest: Forest, eval_set: Dataset,
              mode: str = CONSEQUENT, predictions: np.ndarray | None = None) -> float:
    rules = [expl] if isinstance(expl, Rule) else expl.rules
    if not rules:
        return 1.0
    if predictions is None:
        predictions = forest.predict_many(eval_set.rows)
    return float(np.mean([rule_precision(r, forest, eval_set, mode, predictions)[0] for r in rules]))


@dataclass(frozen=True)
class MetricsRow:
    strategy: str
    L_mean: float
    L_std: float
    C_mean: float
    C_std: float
    P_mean: float
    P_std: float
    T_mean: float
    T_std: float
    explained: int = 0
    skipped: int = 0
    zero_coverage_rules: int = 0
    counterexamples: int = 0

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class FoldRecord:
    """Per-instance results of one strategy on one fold."""
    strategy: str
    fold: int
    lengths: list[int] = field(default_factory=list)
    coverages: list[float] = field(default_factory=list)
    precisions: list[float] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    skipped: int = 0
    zero_coverage_rules: int = 0
    counterexamples: int = 0
    checked_rules: int = 0

    def means(self) -> tuple[float, float, float, float]:
        def m(xs):
            return float(np.mean(xs)) if xs else 0.0
        return m(self.lengths), m(self.coverages), m(self.precisions), m(self.times)


@dataclass
class Evaluation:
    rows: list[MetricsRow]
    folds: list[FoldRecord]
    n_folds: int
    seed: int


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Disjoint test index sets covering ``range(n)``; assignment fixed by ``seed``."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"{n} rows cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def evaluate(ds: Dataset, strategies: Sequence[str] = ("all", "label", "subsets"), folds: int = 10,
             seed: int = 0, n_trees: int = 100, max_depth: int | None = None,
             cfg: StrategyConfig | None = None, precision_mode: str = CONSEQUENT,
             check_samples: int = 0, check_per_fold: int | None = None) -> Evaluation:
    """Train per fold, explain every test row with each strategy, aggregate over folds.

    T is wall-clock seconds per explained instance and excludes forest training.
    Instances predicted all-negative get no explanation and are counted as skipped.
    With ``check_samples`` > 0 every rule of the first ``check_per_fold`` test rows
    (all rows if None) is also sampled for conclusiveness.
    """
    base = cfg or StrategyConfig()
    parts = fold_indices(len(ds), folds, seed)
    records: list[FoldRecord] = []
    for k, test_idx in enumerate(parts):
        train_mask = np.ones(len(ds), dtype=bool)
        train_mask[test_idx] = False
        train, test = ds.subset(train_mask), ds.subset(test_idx)
        forest = train_forest(train, n_trees=n_trees, max_depth=max_depth, seed=seed + k)
        itemsets = frequent_label_subsets(train.labels, base.min_support)
        test_pred = forest.predict_many(test.rows)
        for kind in strategies:
            scfg = StrategyConfig(kind, base.max_subsets, base.min_support, base.subset_min_size,
                                  base.reduction)
            rec = FoldRecord(kind, k)
            for j, x in enumerate(test.rows):
                t0 = time.perf_counter()
                expl = explain(forest, x, scfg, itemsets=itemsets)
                elapsed = time.perf_counter() - t0
                if not expl.rules:
                    rec.skipped += 1
                    continue
                rec.lengths.append(rule_length(expl))
                rec.coverages.append(coverage(expl, test))
                precs = [rule_precision(r, forest, test, precision_mode, test_pred) for r in expl.rules]
                rec.precisions.append(float(np.mean([p for p, _ in precs])))
                rec.zero_coverage_rules += sum(z for _, z in precs)
                rec.times.append(elapsed)
                if check_samples and (check_per_fold is None or j < check_per_fold):
                    for r in expl.rules:
                        rep = check_conclusiveness(r, forest, x, check_samples, seed=seed + j)
                        rec.counterexamples += not rep.holds
                        rec.checked_rules += 1
            records.append(rec)
    rows = []
    for kind in strategies:
        recs = [r for r in records if r.strategy == kind]
        # a fold that explained nothing has no L/C/P/T to contribute
        per_fold = np.array([r.means() for r in recs if r.lengths])
        if len(per_fold):
            mean, std = per_fold.mean(axis=0), per_fold.std(axis=0)
        else:
            mean = std = np.zeros(4)
        rows.append(MetricsRow(
            kind, mean[0], std[0], mean[1], std[1], mean[2], std[2], mean[3], std[3],
            explained=sum(len(r.lengths) for r in recs),
            skipped=sum(r.skipped for r in recs),
            zero_coverage_rules=sum(r.zero_coverage_rules for r in recs),
            counterexamples=sum(r.counterexamples for r in recs),
        ))
    return Evaluation(rows, records, folds, seed)


# ------------------------------------------------------------------- output


def _num(v: float) -> str:
    return repr(float(v))


def to_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.strategy] + [_num(v) for v in r.values()[1:]])
    return buf.getvalue()


def to_markdown(rows: Sequence[MetricsRow], title: str | None = None) -> str:
    lines = []
    if title:
        lines += [f"### {title}", ""]
    lines += ["| Algorithm | L | C | P | T (s) | explained | skipped |",
              "|---|---|---|---|---|---|---|"]
    for r in rows:
        lines.append(
            f"| {DISPLAY.get(r.strategy, r.strategy)} | {r.L_mean:.2f} ± {r.L_std:.2f} "
            f"| {r.C_mean:.2f} ± {r.C_std:.2f} | {r.P_mean:.2f} ± {r.P_std:.2f} "
            f"| {r.T_mean:.3f} ± {r.T_std:.3f} | {r.explained} | {r.skipped} |")
    lines += ["", "T is seconds per explained instance, forest training excluded."]
    return "\n".join(lines) + "\n"
