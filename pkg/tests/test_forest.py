import numpy as np
import pytest

from simtreerank.core import Dataset
from simtreerank.forest import SimilarityForest, forest_score, normalized_score, train_forest
from simtreerank.leafrank import Leaf, LeafConfig, Node, SymClassifier
from simtreerank.pairs import build_pairs
from simtreerank.roc import auc, roc_from_scores
from simtreerank.treerank import SimilarityTree, train


def blobs(n=80, seed=0, sep=6.0):
    rng = np.random.default_rng(seed)
    y = rng.integers(1, 3, n)
    X = rng.normal(size=(n, 2)) * 0.3 + sep * (y[:, None] - 1)
    return Dataset(X, y)


def stump_tree(threshold, left_label=1):
    clf = SymClassifier(Node(0, threshold, Leaf(left_label), Leaf(-left_label)), "stump", 2)
    return SimilarityTree(1, 1, "diag", {(0, 0): clf}, [0.5, 0.5], [0.5, 0.5], {(0, 0): 0.0})


def test_single_tree_forest_ranks_like_tree():
    d = blobs()
    f = train_forest(d, n_trees=1, depth=3, pairs_per_tree=500, seed=1, workers=1)
    t = f.trees[0]
    pairs = build_pairs(d, "diag")
    assert np.array_equal(np.argsort(f.score_features(pairs.features), kind="stable"),
                          np.argsort(t.score_features(pairs.features), kind="stable"))


def test_forest_deterministic_and_worker_independent():
    d = blobs(seed=1)
    a = train_forest(d, n_trees=3, depth=2, pairs_per_tree=300, seed=5, workers=1)
    b = train_forest(d, n_trees=3, depth=2, pairs_per_tree=300, seed=5, workers=2)
    x, xp = np.random.default_rng(2).normal(size=(2, 100, 2))
    assert np.array_equal(a.score_pairs(x, xp), b.score_pairs(x, xp))
    assert a.seeds == b.seeds


def test_separable_forest_auc():
    d = blobs(n=120, seed=3)
    test = build_pairs(blobs(n=80, seed=4), "diag")
    f = train_forest(d, n_trees=4, depth=3, pairs_per_tree=2000, leaf=LeafConfig("tree", 3), seed=0, workers=1)
    assert auc(roc_from_scores(f.score_features(test.features), test.z)) >= 0.99


def test_normalized_leaf_scores():
    f = SimilarityForest([stump_tree(0.0)])
    assert forest_score(f, [-1.0], [-1.0]) == 1.0
    assert forest_score(f, [1.0], [1.0]) == 0.0


def test_maximal_disagreement_gives_half():
    f = SimilarityForest([stump_tree(0.0, 1), stump_tree(0.0, -1)])
    assert forest_score(f, [-1.0], [-1.0]) == 0.5


def test_permutation_invariance_and_bounds():
    d = blobs(seed=5, sep=1.0)
    f = train_forest(d, n_trees=4, depth=3, pairs_per_tree=400, seed=2, workers=1)
    rev = SimilarityForest(f.trees[::-1])
    F = build_pairs(d, "diag").features
    s = f.score_features(F)
    assert np.allclose(s, rev.score_features(F), atol=1e-15)
    per = np.array([normalized_score(t, F) for t in f.trees])
    assert np.all(per.min(axis=0) <= s + 1e-15) and np.all(s <= per.max(axis=0) + 1e-15)


def test_forest_swap_invariant():
    f = train_forest(blobs(seed=6, sep=1.0), n_trees=3, depth=3, pairs_per_tree=500, seed=0, workers=1)
    x, xp = np.random.default_rng(0).normal(size=(2, 1000, 2))
    assert np.array_equal(f.score_pairs(x, xp), f.score_pairs(xp, x))


def test_forest_on_pair_batch(make_batch, rng):
    b = make_batch(rng, n=400)
    f = train_forest(b, n_trees=2, depth=2, pairs_per_tree=100, seed=0, workers=1)
    assert len(f.trees) == 2 and f.transform == "diag"


def test_mixed_trees_rejected():
    t = stump_tree(0.0)
    other = SimilarityTree(0, 2, "diag", {}, [1.0], [1.0])
    with pytest.raises(ValueError):
        SimilarityForest([t, other])
    with pytest.raises(ValueError):
        SimilarityForest([])
