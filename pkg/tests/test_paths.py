import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import RUN_INSTANCE, running_forest, path_tree, unit_space
from quorumforest.data import Dataset
from quorumforest.forest import Forest, Tree, predict, train_forest, tree_predict
from quorumforest.paths import GT, LE, Condition, PathSet, extract_all_paths, extract_path, voting_paths


def test_leaf_only_tree():
    p = extract_path(Tree.leaf([1, 0]), [0.4])
    assert p.conditions == ()
    assert p.votes == (1, 0)


def test_two_level_traversal():
    # root f<=0.5, its left child f<=0.2; 0.3 goes left then right
    t = Tree([0, 0, -1, -1, -1], [0.5, 0.2, 0, 0, 0], [1, 3, -1, -1, -1], [2, 4, -1, -1, -1],
             [[0], [0], [0], [0], [1]])
    p = extract_path(t, [0.3])
    assert p.conditions == (Condition(0, LE, 0.5), Condition(0, GT, 0.2))
    assert p.votes == (1,)
    assert p.leaf == 4


def test_running_example_counts():
    f = running_forest()
    ps = extract_all_paths(f, RUN_INSTANCE)
    assert len(ps) == 9 and ps.source_size == 9
    assert predict(f, RUN_INSTANCE).tolist() == [0, 1, 0, 1, 1]
    assert len(voting_paths(ps, [0, 1, 0, 1, 1])) == 6
    assert len(voting_paths(ps, [0, 1, 0, 1, 0])) >= 6


def test_single_tree_forest():
    f = Forest((path_tree([(0, "<=", 0.5)], [1]),), ("y",), unit_space(1))
    assert len(extract_all_paths(f, [0.1])) == 1


def test_unanimous_label_keeps_all():
    f = Forest(tuple(Tree.leaf([1, 0]) for _ in range(5)), ("a", "b"))
    ps = extract_all_paths(f, [0.0])
    assert len(voting_paths(ps, [1, 0])) == 5


def test_empty_mask_rejected():
    ps = extract_all_paths(running_forest(), RUN_INSTANCE)
    with pytest.raises(ValueError):
        voting_paths(ps, [0, 0, 0, 0, 0])


def test_duplicate_tree_ids_rejected():
    p = extract_path(Tree.leaf([1]), [0.0], 3)
    with pytest.raises(ValueError):
        PathSet((p, p), 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_paths_cover_instance_and_recount(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((40, 3))
    Y = (rng.random((40, 3)) < 0.4).astype(int)
    f = train_forest(Dataset(unit_space(3), X, Y, ("a", "b", "c")), n_trees=7, seed=seed)
    for x in rng.random((5, 3)):
        ps = extract_all_paths(f, x)
        votes = np.zeros(3, dtype=int)
        for p, t in zip(ps, f.trees):
            assert p.covers(x)
            assert list(p.votes) == tree_predict(t, x).tolist()
            for feat in p.features:
                lo, _, hi = p.interval(feat, 0.0, 1.0)
                assert lo < hi
            votes += np.array(p.votes)
        assert predict(f, x).tolist() == (votes >= f.quorum).astype(int).tolist()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=1, max_size=9),
       st.lists(st.integers(0, 1), min_size=4, max_size=4),
       st.lists(st.integers(0, 1), min_size=4, max_size=4))
def test_voting_paths_monotone(votes, a, b):
    mask_b = np.array(a) | np.array(b)
    mask_a = np.array(a)
    if not mask_a.any():
        return
    f = Forest(tuple(Tree.leaf(v) for v in votes), ("a", "b", "c", "d"))
    ps = extract_all_paths(f, [0.0])
    big = set(voting_paths(ps, mask_b).tree_ids)
    small = set(voting_paths(ps, mask_a).tree_ids)
    assert big <= small
    assert small == {i for i, v in enumerate(votes) if all(v[j] for j in np.nonzero(mask_a)[0])}
