import numpy as np
import pytest

from builders import (
    FALLBACK_INSTANCE, RUN_INSTANCE, RUN_TRAIN_LABELS, fallback_forest, running_forest, path_tree,
    unit_space,
)
from quorumforest.data import generate_ai4i_like, prepare
from quorumforest.forest import Forest, Tree, predict, train_forest
from quorumforest.fpm import FrequentItemset, frequent_label_subsets
from quorumforest.rules import check_conclusiveness
from quorumforest.strategies import (
    NO_ACTIVATED_SUBSETS, NO_POSITIVE_LABELS, StrategyConfig, activated_subsets, explain,
    explain_all, explain_per_label, explain_subsets,
)


def test_running_example_per_label():
    f = running_forest()
    e = explain_per_label(f, RUN_INSTANCE)
    assert len(e.rules) == 3
    assert [r.labels for r in e.rules] == [[1], [3], [4]]
    assert all(t.stages[-1][2] == 5 for t in e.traces)
    assert e.length == sum(r.length for r in e.rules)


def test_running_example_all():
    f = running_forest()
    e = explain_all(f, RUN_INSTANCE)
    assert len(e.rules) == 1 and not e.fallback_used
    assert e.traces[0].stages[0][1] == 6 and e.traces[0].stages[-1][2] == 5
    assert e.rules[0].labels == [1, 3, 4]


def test_running_example_subsets():
    f = running_forest()
    e = explain_subsets(f, RUN_INSTANCE, StrategyConfig("subsets"), train_labels=RUN_TRAIN_LABELS)
    assert len(e.rules) == 1
    assert [f.label_names[i] for i in e.rules[0].labels] == ["label2", "label4"]


def test_consequent_soundness_and_conclusiveness():
    f = running_forest()
    pred = predict(f, RUN_INSTANCE)
    for kind in ("label", "all", "subsets"):
        e = explain(f, RUN_INSTANCE, StrategyConfig(kind), train_labels=RUN_TRAIN_LABELS)
        for k, r in enumerate(e.rules):
            assert all(pred[i] for i in r.labels)
            assert check_conclusiveness(r, f, RUN_INSTANCE, 1000, seed=k).holds


def test_fallback_uses_every_path():
    f = fallback_forest()
    e = explain_all(f, FALLBACK_INSTANCE)
    assert predict(f, FALLBACK_INSTANCE).tolist() == [1, 1]
    assert e.fallback_used and e.traces[0].under_quorum
    assert len(e.retained[0]) == 9
    assert check_conclusiveness(e.rules[0], f, FALLBACK_INSTANCE, 1000, seed=0).holds


def test_subset_fallback_mirrors_all():
    f = fallback_forest()
    items = [FrequentItemset((0, 1), 0.5, 5)]
    e = explain_subsets(f, FALLBACK_INSTANCE, StrategyConfig("subsets"), itemsets=items)
    assert e.fallback_used and len(e.retained[0]) == 9


def test_per_label_never_falls_back():
    f = fallback_forest()
    e = explain_per_label(f, FALLBACK_INSTANCE)
    assert not e.fallback_used and len(e.rules) == 2
    assert all(len(ps) == 5 for ps in e.retained)


def test_single_label_unanimous():
    f = Forest(tuple(path_tree([(0, "<=", 0.5 + i / 100)], [1]) for i in range(7)), ("y",), unit_space(1))
    e = explain_per_label(f, [0.2])
    assert len(e.rules) == 1 and len(e.retained[0]) == 4


def test_all_negative_prediction():
    f = Forest((Tree.leaf([0, 0]),) * 3, ("a", "b"), unit_space(1))
    for kind in ("label", "all", "subsets"):
        e = explain(f, [0.5], StrategyConfig(kind), itemsets=[])
        assert e.rules == [] and e.flags == [NO_POSITIVE_LABELS]


def test_no_activated_subsets():
    e = explain_subsets(running_forest(), RUN_INSTANCE, itemsets=[FrequentItemset((0, 2), 0.3, 3)])
    assert e.rules == [] and e.flags == [NO_ACTIVATED_SUBSETS]


def test_subset_ordering_and_truncation():
    names = ("a", "b", "c", "d")
    items = [FrequentItemset((0, 1), 0.2, 2), FrequentItemset((1, 2), 0.4, 4),
             FrequentItemset((0, 1, 2), 0.2, 2), FrequentItemset((0, 2), 0.2, 2)]
    got = activated_subsets(items, [0, 1, 2], names)
    assert [fi.items for fi in got] == [(1, 2), (0, 1, 2), (0, 1), (0, 2)]
    assert [fi.items for fi in activated_subsets(items[:2] + items[3:], [0, 1, 2], names, limit=1)] == [(1, 2)]


def test_config_validation():
    with pytest.raises(ValueError):
        StrategyConfig("bogus")
    with pytest.raises(ValueError):
        StrategyConfig("subsets", max_subsets=0)


@pytest.fixture(scope="module")
def d4():
    ds = prepare(generate_ai4i_like(339, 7))
    return ds, train_forest(ds, n_trees=25, seed=0)


def test_d4_per_label_shapes(d4):
    ds, f = d4
    preds = f.predict_many(ds.rows)
    row = int(np.argmax(preds.sum(axis=1)))
    e = explain_per_label(f, ds.rows[row])
    assert [f.label_names[r.labels[0]] for r in e.rules] == [
        f.label_names[i] for i in np.nonzero(preds[row])[0]]


def test_d4_pwf_osf_subset(d4):
    ds, f = d4
    pwf, osf = ds.label_names.index("PWF"), ds.label_names.index("OSF")
    preds = f.predict_many(ds.rows)
    rows = np.nonzero(preds[:, pwf] & preds[:, osf])[0]
    assert len(rows) > 0
    items = frequent_label_subsets(ds.labels, 0.1)
    e = explain_subsets(f, ds.rows[rows[0]], StrategyConfig("subsets", max_subsets=1), itemsets=items)
    assert len(e.rules) == 1
    rule = e.rules[0]
    assert rule.to_text(f.space, f.label_names).endswith("then PWF OSF")
    assert 1 <= rule.length <= 6
    assert check_conclusiveness(rule, f, ds.rows[rows[0]], 1000, seed=1).holds


def test_deterministic_output(d4):
    ds, f = d4
    cfg = StrategyConfig("all")
    a = explain_all(f, ds.rows[3], cfg).to_dict(f, emit_paths=True)
    b = explain_all(f, ds.rows[3], cfg).to_dict(f, emit_paths=True)
    a.pop("elapsed_seconds"), b.pop("elapsed_seconds")
    assert a == b
    assert len(a["paths"][0]) == 13
