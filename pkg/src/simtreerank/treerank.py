"""Similarity TreeRank: recursive ROC optimization over symmetric pair cells.

Node (d, k) at depth d covers cell C_{d,k}; its left child C_{d+1,2k} is the
region LeafRank predicts positive and gets the higher score.  Every depth
keeps the full 2^d indexing.  A node that is not split sends all of its
rows left and leaves an empty right sibling, so leaf k always scores 2^D - k.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .leafrank import LeafConfig, SymClassifier, fit_split, positive_fraction
from .pairs import PairBatch
from .roc import RocCurve, auc, roc_from_scores
from .transform import SymmetricTransform, apply


def default_depth(n_pairs):
    """Depth schedule growing like sqrt(log n), clamped to [1, 15]."""
    if n_pairs < 2:
        return 1
    return int(min(15, max(1, round(math.sqrt(math.log(n_pairs))))))


@dataclass(frozen=True)
class SplitRecord:
    """Bookkeeping for one visit of the growth loop, in visiting order."""

    d: int
    k: int
    neg_cell: float
    pos_cell: float
    neg_left: float
    pos_left: float
    lam: float
    accepted: bool


@dataclass
class SimilarityTree:
    depth: int
    q: int
    transform: str
    splits: dict
    leaf_neg: np.ndarray
    leaf_pos: np.ndarray
    lambdas: dict = field(default_factory=dict)
    alpha: list = None
    beta: list = None
    history: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.leaf_neg = np.asarray(self.leaf_neg, dtype=float)
        self.leaf_pos = np.asarray(self.leaf_pos, dtype=float)
        if self.leaf_neg.shape != (2**self.depth,) or self.leaf_pos.shape != (2**self.depth,):
            raise ValueError("leaf masses must have 2^depth entries")
        if self.alpha is None:
            self.alpha, self.beta = knots_from_leaves(self.leaf_neg, self.leaf_pos, self.depth)

    @property
    def n_leaves(self):
        return 2**self.depth

    @property
    def sym_transform(self):
        return SymmetricTransform(self.transform, self.q)

    # ---------------------------------------------------------- routing

    def leaf_index(self, F):
        """Leaf index k in 0..2^D-1 of each transformed row."""
        F = np.asarray(F, dtype=float)
        if F.ndim != 2 or F.shape[1] != 2 * self.q:
            raise ValueError(f"expected transformed pairs of width {2 * self.q}, got {F.shape}")
        k = np.zeros(len(F), dtype=np.int64)
        for d in range(self.depth):
            right = np.zeros(len(F), dtype=bool)
            live = [kk for (dd, kk) in self.splits if dd == d]
            if live:
                order = np.argsort(k, kind="stable")
                ks = k[order]
                for kk in live:
                    lo, hi = np.searchsorted(ks, [kk, kk + 1])
                    if lo == hi:
                        continue
                    idx = order[lo:hi]
                    right[idx] = self.splits[(d, kk)].predict_many(F[idx]) != 1
            k = 2 * k + right
        return k

    def score_features(self, F):
        return self.n_leaves - self.leaf_index(F)

    def score_pairs(self, x, xp):
        return self.score_features(apply(self.sym_transform, x, xp))

    def to_dict(self):
        return {
            "kind": "tree",
            "transform": self.transform,
            "tree": {
                "depth": self.depth,
                "q": self.q,
                "splits": [{"d": d, "k": k, "classifier": c.to_dict(), "lambda": self.lambdas.get((d, k), 0.0)}
                           for (d, k), c in sorted(self.splits.items())],
                "leaf_neg": self.leaf_neg.tolist(),
                "leaf_pos": self.leaf_pos.tolist(),
            },
            "knots": [[float(a), float(b)] for a, b in zip(self.alpha[-1], self.beta[-1])],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, doc):
        t = doc["tree"]
        splits, lambdas = {}, {}
        for s in t["splits"]:
            key = (int(s["d"]), int(s["k"]))
            splits[key] = SymClassifier.from_dict(s["classifier"])
            lambdas[key] = float(s["lambda"])
        tree = cls(int(t["depth"]), int(t["q"]), doc["transform"], splits,
                   t["leaf_neg"], t["leaf_pos"], lambdas, metadata=doc.get("metadata", {}))
        if "knots" in doc:
            # keep the stored broken line bit for bit rather than re-summing leaf masses
            k = np.asarray(doc["knots"], dtype=float)
            if k.shape != (tree.n_leaves + 1, 2):
                raise ValueError("knot list does not match the tree depth")
            tree.alpha[-1], tree.beta[-1] = k[:, 0], k[:, 1]
        return tree


def knots_from_leaves(leaf_neg, leaf_pos, depth):
    """Per-depth knot arrays (alpha_d, beta_d) from leaf masses."""
    alpha, beta = [], []
    for d in range(depth + 1):
        g = 2 ** (depth - d)
        a = np.r_[0.0, np.cumsum(leaf_neg.reshape(-1, g).sum(axis=1))]
        b = np.r_[0.0, np.cumsum(leaf_pos.reshape(-1, g).sum(axis=1))]
        a[-1] = b[-1] = 1.0
        alpha.append(a)
        beta.append(b)
    return alpha, beta


def lambda_measure(alpha_d, beta_d, k, pos_rate, neg_rate):
    """Entropic measure of a candidate subset of cell (d, k)."""
    return (alpha_d[k + 1] - alpha_d[k]) * pos_rate - (beta_d[k + 1] - beta_d[k]) * neg_rate


def train(batch, depth=None, leaf=None):
    """Grow a similarity tree of the given depth on a pair batch."""
    if leaf is None:
        leaf = LeafConfig()
    if depth is None:
        depth = default_depth(len(batch))
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if leaf.family == "straddle" and batch.transform != "minmax":
        raise ValueError("straddle splits require the minmax transform")
    F, z, w = batch.features, batch.z, batch.weights
    pos = z == 1
    wp, wn = w[pos].sum(), w[~pos].sum()
    if wp == 0 or wn == 0:
        raise ValueError("training batch must contain both positive and negative pairs")
    if F.shape[1] % 2:
        raise ValueError("transformed pairs must have even width")
    rate_pos = np.where(pos, w / wp, 0.0)
    rate_neg = np.where(pos, 0.0, w / wn)

    alpha, beta = [np.array([0.0, 1.0])], [np.array([0.0, 1.0])]
    rows = {0: np.arange(len(z))}
    splits, lambdas, history = {}, {}, []
    for d in range(depth):
        a_next = np.zeros(2 ** (d + 1) + 1)
        b_next = np.zeros(2 ** (d + 1) + 1)
        a_next[-1] = b_next[-1] = 1.0
        next_rows = {}
        for k in range(2**d):
            idx = rows.get(k, np.empty(0, dtype=np.int64))
            left, clf, lam = idx, None, 0.0
            zc = z[idx]
            if len(idx) >= leaf.min_rows and np.any(zc == 1) and np.any(zc == -1):
                p = positive_fraction(zc, w[idx])
                cand = fit_split(F[idx], zc, p, leaf.family, leaf.depth, w[idx], leaf.min_rows)
                inside = idx[cand.predict_many(F[idx]) == 1]
                lam = lambda_measure(alpha[d], beta[d], k, rate_pos[inside].sum(), rate_neg[inside].sum())
                if lam > 0 and 0 < len(inside) < len(idx):
                    left, clf = inside, cand
            history.append(SplitRecord(d, k, rate_neg[idx].sum(), rate_pos[idx].sum(),
                                       rate_neg[left].sum(), rate_pos[left].sum(),
                                       lam if clf is not None else 0.0, clf is not None))
            if clf is not None:
                splits[(d, k)] = clf
                lambdas[(d, k)] = lam
            a_next[2 * k + 1] = alpha[d][k] + rate_neg[left].sum()
            b_next[2 * k + 1] = beta[d][k] + rate_pos[left].sum()
            a_next[2 * k + 2] = alpha[d][k + 1]
            b_next[2 * k + 2] = beta[d][k + 1]
            next_rows[2 * k] = left
            if clf is not None:
                next_rows[2 * k + 1] = np.setdiff1d(idx, left, assume_unique=True)
        alpha.append(a_next)
        beta.append(b_next)
        rows = next_rows

    leaf_neg = np.zeros(2**depth)
    leaf_pos = np.zeros(2**depth)
    for k, idx in rows.items():
        leaf_neg[k] = rate_neg[idx].sum()
        leaf_pos[k] = rate_pos[idx].sum()
    q = F.shape[1] // 2
    meta = {"depth": depth, "leaf_family": leaf.family, "leaf_depth": leaf.depth,
            "min_rows": leaf.min_rows, "n_pairs": len(z)}
    return SimilarityTree(depth, q, batch.transform, splits, leaf_neg, leaf_pos, lambdas,
                          alpha, beta, history, meta)


def score(tree, x, xp):
    """Integer similarity 2^D - k of the leaf the pair falls in."""
    x = np.asarray(x, dtype=float)
    s = tree.score_pairs(np.atleast_2d(x), np.atleast_2d(xp))
    return int(s[0]) if x.ndim == 1 else s


def empirical_roc(tree):
    return RocCurve(tree.alpha[-1], tree.beta[-1])


def empirical_auc(tree):
    """1/2 plus half the sum of the accepted splits' entropic measures."""
    return 0.5 + 0.5 * math.fsum(tree.lambdas.values())


# ------------------------------------------------------------------ pruning

def _auc_from_leaves(leaf, z, w, n_leaves):
    """Twice the unnormalized concordance AUC of leaf-ranked rows (exact for integer weights)."""
    P = np.bincount(leaf, weights=np.where(z == 1, w, 0.0), minlength=n_leaves)
    N = np.bincount(leaf, weights=np.where(z == 1, 0.0, w), minlength=n_leaves)
    above = np.r_[0.0, np.cumsum(P)[:-1]]
    return float(2.0 * np.sum(N * above) + np.sum(N * P)), P.sum() * N.sum()


def _subtree_has_split(splits, d, k, depth):
    for dd in range(d + 1, depth):
        span = 2 ** (dd - d)
        if any((dd, kk) in splits for kk in range(k * span, (k + 1) * span)):
            return True
    return False


def validation_auc(tree, batch):
    leaf = tree.leaf_index(batch.features)
    num, den = _auc_from_leaves(leaf, batch.z, batch.weights, tree.n_leaves)
    return num / (2.0 * den)


def prune(tree, validation):
    """Merge sibling leaves bottom-up while validation AUC does not decrease."""
    if validation.n_plus == 0 or validation.n_minus == 0:
        raise ValueError("validation batch needs both classes")
    D = tree.depth
    splits = dict(tree.splits)
    lambdas = dict(tree.lambdas)
    leaf_neg = tree.leaf_neg.copy()
    leaf_pos = tree.leaf_pos.copy()
    leaf = tree.leaf_index(validation.features)
    z, w = validation.z, validation.weights
    current, _ = _auc_from_leaves(leaf, z, w, tree.n_leaves)
    changed = True
    while changed:
        changed = False
        for d, k in sorted(splits, key=lambda key: (-key[0], key[1])):
            if _subtree_has_split(splits, d, k, D):
                continue
            span = 2 ** (D - d)
            first = k * span
            merged = np.where((leaf >= first) & (leaf < first + span), first, leaf)
            cand, _ = _auc_from_leaves(merged, z, w, tree.n_leaves)
            if cand >= current:
                current, leaf = cand, merged
                del splits[(d, k)]
                lambdas.pop((d, k), None)
                leaf_neg[first] = leaf_neg[first:first + span].sum()
                leaf_pos[first] = leaf_pos[first:first + span].sum()
                leaf_neg[first + 1:first + span] = 0.0
                leaf_pos[first + 1:first + span] = 0.0
                changed = True
    meta = dict(tree.metadata, pruned=True)
    return SimilarityTree(D, tree.q, tree.transform, splits, leaf_neg, leaf_pos, lambdas,
                          metadata=meta)


def as_batch(tree, x, xp, z, weights=None):
    return PairBatch(apply(tree.sym_transform, x, xp), z, weights, tree.transform, x, xp)
