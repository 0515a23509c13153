"""Ranking forests: similarity trees on independent pair subsamples, averaged."""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, derive_rng, derive_seed
from .leafrank import LeafConfig
from .pairs import PairBatch, build_pairs
from .transform import SymmetricTransform, apply
from .treerank import SimilarityTree, train

DEFAULT_TREES = 44
DEFAULT_DEPTH = 15
DEFAULT_PAIRS_PER_TREE = 100_000


@dataclass
class SimilarityForest:
    trees: list
    seeds: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.trees:
            raise ValueError("a forest needs at least one tree")
        kinds = {(t.transform, t.q) for t in self.trees}
        if len(kinds) != 1:
            raise ValueError("all trees must share the transform and input dimension")

    @property
    def transform(self):
        return self.trees[0].transform

    @property
    def q(self):
        return self.trees[0].q

    def score_features(self, F):
        F = np.asarray(F, dtype=float)
        total = np.zeros(len(F))
        for t in self.trees:
            total += normalized_score(t, F)
        return total / len(self.trees)

    def score_pairs(self, x, xp):
        return self.score_features(apply(SymmetricTransform(self.transform, self.q), x, xp))

    def to_dict(self):
        docs = [t.to_dict() for t in self.trees]
        return {"kind": "forest", "transform": self.transform,
                "trees": [{"tree": d["tree"], "knots": d["knots"], "metadata": d["metadata"]} for d in docs],
                "seeds": [str(s) for s in self.seeds],
                "metadata": dict(self.metadata)}

    @classmethod
    def from_dict(cls, doc):
        trees = [SimilarityTree.from_dict({"transform": doc["transform"], **t}) for t in doc["trees"]]
        return cls(trees, [int(s) for s in doc.get("seeds", [])], doc.get("metadata", {}))


def normalized_score(tree, F):
    """Tree score mapped to [0, 1]: top leaf 1, bottom leaf 0."""
    s = tree.score_features(F).astype(float)
    if tree.depth == 0:
        return np.full(len(s), 0.5)
    return (s - 1.0) / (tree.n_leaves - 1.0)


def forest_score(forest, x, xp):
    x = np.asarray(x, dtype=float)
    s = forest.score_pairs(np.atleast_2d(x), np.atleast_2d(xp))
    return float(s[0]) if x.ndim == 1 else s


def subsample(batch, size, seed):
    """``size`` rows of a pair batch drawn without replacement (all if fewer)."""
    if size is None or size >= len(batch):
        return batch
    rng = derive_rng(seed, "pairs")
    return batch.subset(np.sort(rng.choice(len(batch), size=size, replace=False)))


def _fit_member(args):
    source, transform, pairs_per_tree, seed, depth, leaf = args
    if isinstance(source, PairBatch):
        batch = subsample(source, pairs_per_tree, seed)
    else:
        batch = build_pairs(source, transform, pairs_per_tree, seed)
    return train(batch, depth, leaf)


def default_workers():
    return int(os.environ.get("SIMTREERANK_WORKERS", os.cpu_count() or 1))


def train_forest(dataset, transform="diag", n_trees=DEFAULT_TREES, depth=DEFAULT_DEPTH,
                 pairs_per_tree=DEFAULT_PAIRS_PER_TREE, leaf=None, seed=0, workers=None):
    """Tree ``b`` is trained on its own pair subsample, seeded from (seed, b).

    ``dataset`` is either a labeled Dataset, whose pairs are subsampled, or a
    ready PairBatch, whose rows are.
    """
    if n_trees < 1:
        raise ValueError("need at least one tree")
    leaf = leaf or LeafConfig()
    if isinstance(dataset, PairBatch):
        transform = dataset.transform
    elif not isinstance(dataset, Dataset):
        raise TypeError("train_forest needs a Dataset or a PairBatch")
    elif isinstance(transform, str):
        transform = SymmetricTransform(transform, dataset.q)
    seeds = [derive_seed(seed, "forest", b) for b in range(n_trees)]
    jobs = [(dataset, transform, pairs_per_tree, s, depth, leaf) for s in seeds]
    workers = default_workers() if workers is None else workers
    if workers > 1 and n_trees > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_trees)) as pool:
            trees = list(pool.map(_fit_member, jobs))
    else:
        trees = [_fit_member(j) for j in jobs]
    meta = {"seed": str(seed), "depth": depth, "leaf_depth": leaf.depth,
            "leaf_family": leaf.family, "pairs_per_tree": pairs_per_tree}
    return SimilarityForest(trees, seeds, meta)
