import numpy as np
import pytest

from builders import RUN_INSTANCE, running_forest, path_tree, unit_space
from oracles import scan_coverage, scan_precision
from quorumforest.data import Dataset, generate_ai4i_like, prepare
from quorumforest.evalx import (
    CSV_COLUMNS, coverage, evaluate, fold_indices, precision, rule_length, rule_precision, to_csv,
    to_markdown,
)
from quorumforest.forest import Forest
from quorumforest.rules import FeatureRange, build_rule
from quorumforest.strategies import Explanation, explain_all, explain_per_label


def grid(n=50, d=2, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    return Dataset(unit_space(d), X, np.zeros((n, 1)), ("y",))


def test_lengths():
    rules = [build_rule([FeatureRange(i, 0, 1) for i in range(k)], [], [1]) for k in (5, 5, 4)]
    assert rule_length(Explanation("label", rules=rules)) == 14
    assert rule_length(Explanation("all", rules=[build_rule([FeatureRange(i, 0, 1) for i in range(6)], [], [1])])) == 6
    assert rule_length(Explanation("label")) == 0


def test_coverage_extremes():
    ds = grid()
    assert coverage(build_rule([FeatureRange(0, 0.0, 1.0), FeatureRange(1, 0.0, 1.0)], [], [1]), ds) == 1.0
    assert coverage(build_rule([FeatureRange(0, 2.0, 3.0)], [], [1]), ds) == 0.0


def test_precision_of_self_covering_rule():
    f = running_forest()
    x = RUN_INSTANCE
    rule = build_rule([FeatureRange(i, v, v) for i, v in enumerate(x)], [], [0, 1, 0, 0, 0])
    ds = Dataset(unit_space(3), np.vstack([x, [0.9, 0.0, 0.9]]), np.zeros((2, 5)), tuple("abcde"))
    assert coverage(rule, ds) == 0.5
    assert precision(rule, f, ds) == 1.0


def test_widened_rule_loses_precision():
    trees = tuple(path_tree([(0, ">", 0.3), (0, "<=", 0.6)], [1]) for _ in range(5))
    f = Forest(trees, ("y",), unit_space(2))
    ds = grid(200)
    x = np.array([0.45, 0.5])
    tight = explain_all(f, x).rules[0]
    assert precision(tight, f, ds) == 1.0
    wide = build_rule([FeatureRange(0, 0.0, 1.0)], [], [1])
    p, zero = rule_precision(wide, f, ds)
    assert not zero and p < 1.0
    assert p == scan_precision([wide], ds.rows, f.predict_many(ds.rows), ds.space)


def test_zero_coverage_flag():
    f = running_forest()
    p, zero = rule_precision(build_rule([FeatureRange(0, 5.0, 6.0)], [], [0, 1, 0, 0, 0]), f, grid(10, 3))
    assert (p, zero) == (1.0, True)


def test_fold_partition():
    parts = fold_indices(10, 2, 0)
    assert [len(p) for p in parts] == [5, 5]
    assert set(parts[0]).isdisjoint(parts[1]) and set(parts[0]) | set(parts[1]) == set(range(10))
    assert [p.tolist() for p in fold_indices(10, 2, 0)] == [p.tolist() for p in parts]
    with pytest.raises(ValueError):
        fold_indices(10, 1, 0)
    with pytest.raises(ValueError):
        fold_indices(3, 4, 0)


@pytest.fixture(scope="module")
def small_eval():
    ds = prepare(generate_ai4i_like(90, 5))
    return ds, evaluate(ds, ("all", "label", "subsets"), folds=3, seed=2, n_trees=11, check_samples=200)


def test_evaluate_rows(small_eval):
    _, ev = small_eval
    assert [r.strategy for r in ev.rows] == ["all", "label", "subsets"]
    for r in ev.rows:
        assert 0 <= r.C_mean <= 1 and r.P_mean == 1.0 and r.P_std == 0.0
        assert r.L_mean >= 0 and r.T_mean >= 0 and r.counterexamples == 0
    assert len(ev.folds) == 9


def test_metrics_match_linear_scan_oracle(small_eval):
    ds, ev = small_eval
    from quorumforest.forest import train_forest
    from quorumforest.fpm import frequent_label_subsets
    from quorumforest.strategies import StrategyConfig, explain
    for k, test_idx in enumerate(fold_indices(len(ds), 3, 2)):
        mask = np.ones(len(ds), dtype=bool)
        mask[test_idx] = False
        train, test = ds.subset(mask), ds.subset(test_idx)
        f = train_forest(train, n_trees=11, seed=2 + k)
        items = frequent_label_subsets(train.labels, 0.1)
        preds = f.predict_many(test.rows)
        for rec in (r for r in ev.folds if r.fold == k):
            covs, precs = [], []
            for x in test.rows:
                e = explain(f, x, StrategyConfig(rec.strategy), itemsets=items)
                if e.rules:
                    covs.append(scan_coverage(e.rules, test.rows, test.space))
                    precs.append(scan_precision(e.rules, test.rows, preds, test.space))
            assert rec.coverages == covs
            assert rec.precisions == precs


def test_outputs(small_eval):
    _, ev = small_eval
    text = to_csv(ev.rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 4
    md = to_markdown(ev.rows, "t")
    assert "| LF-a |" in md and "| LF-l |" in md and "| LF-p |" in md


def test_per_label_precision_modes():
    f = running_forest()
    ds = Dataset(unit_space(3), RUN_INSTANCE[None], np.zeros((1, 5)), tuple("abcde"))
    rule = explain_per_label(f, RUN_INSTANCE).rules[0]
    assert precision(rule, f, ds, "consequent") == 1.0
    assert precision(rule, f, ds, "labelset") == 0.0
