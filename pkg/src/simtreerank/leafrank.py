"""Symmetric LeafRank: cost-sensitive splitting of a cell in pair-feature space.

The classifier is a small greedy decision tree over transformed pair
features.  Every node chooses the split that minimizes the cost-weighted
misclassification of its two children, each labeled with its cheaper class:
a negative row predicted positive costs ``p * w``, a positive row predicted
negative costs ``(1 - p) * w``.  With ``p`` the positive share of the cell
this total is proportional to FPR + FNR inside the cell, so minimizing it
maximizes the TreeRank split objective.
"""

from dataclasses import dataclass

import numpy as np

FAMILIES = ("stump", "tree", "straddle")


@dataclass(frozen=True)
class LeafConfig:
    family: str = "tree"
    depth: int = 5
    min_rows: int = 8

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown leaf family {self.family!r}; choose from {FAMILIES}")
        if self.depth < 1:
            raise ValueError("leaf depth must be at least 1")
        if self.min_rows < 2:
            raise ValueError("min_rows must be at least 2")

    @property
    def max_depth(self):
        return 1 if self.family == "stump" else self.depth


@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Node:
    """``axis``: rows with f[feature] <= threshold go left.

    ``straddle``: rows with (f[feature] >= A) xor (f[feature + q] >= A) go
    left, i.e. pairs whose max/min coordinates lie on both sides of A.
    """

    feature: int
    threshold: float
    left: object
    right: object
    kind: str = "axis"


def _goes_left(node, F):
    if node.kind == "axis":
        return F[..., node.feature] <= node.threshold
    h = F.shape[-1] // 2
    return (F[..., node.feature] >= node.threshold) != (F[..., node.feature + h] >= node.threshold)


def _depth(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


@dataclass(frozen=True)
class SymClassifier:
    root: object
    family: str
    dim: int

    @property
    def depth(self):
        return _depth(self.root)

    def predict(self, fx):
        fx = np.asarray(fx, dtype=float)
        if fx.shape != (self.dim,):
            raise ValueError(f"expected a feature vector of length {self.dim}, got {fx.shape}")
        node = self.root
        while isinstance(node, Node):
            node = node.left if _goes_left(node, fx) else node.right
        return node.label

    def predict_many(self, F):
        F = np.asarray(F, dtype=float)
        if F.ndim != 2 or F.shape[1] != self.dim:
            raise ValueError(f"expected features of width {self.dim}, got {F.shape}")
        out = np.empty(len(F), dtype=np.int8)
        stack = [(self.root, np.arange(len(F)))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                out[idx] = node.label
                continue
            m = _goes_left(node, F[idx])
            stack.append((node.left, idx[m]))
            stack.append((node.right, idx[~m]))
        return out

    def to_dict(self):
        return {"family": self.family, "dim": self.dim, "root": _node_to_dict(self.root)}

    @classmethod
    def from_dict(cls, doc):
        return cls(_node_from_dict(doc["root"]), doc["family"], int(doc["dim"]))


def _node_to_dict(node):
    if isinstance(node, Leaf):
        return {"label": node.label}
    return {"feature": node.feature, "threshold": node.threshold, "kind": node.kind,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(doc):
    if "label" in doc:
        label = int(doc["label"])
        if label not in (-1, 1):
            raise ValueError(f"bad leaf label {label}")
        return Leaf(label)
    return Node(int(doc["feature"]), float(doc["threshold"]),
                _node_from_dict(doc["left"]), _node_from_dict(doc["right"]), doc.get("kind", "axis"))


def positive_fraction(z, weights=None):
    """Weighted share of positive rows."""
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("empty slice")
    w = np.ones(z.shape) if weights is None else np.asarray(weights, dtype=float)
    total = w.sum()
    if total == 0:
        raise ValueError("slice has zero total weight")
    return float(w[z == 1].sum() / total)


def split_costs(z, weights, p):
    """Per-row cost of a false negative (positives) and a false positive (negatives)."""
    pos = z == 1
    cpos = np.where(pos, (1.0 - p) * weights, 0.0)
    cneg = np.where(pos, 0.0, p * weights)
    return cpos, cneg


def _axis_search(F, cpos, cneg, tol):
    TP, TN = cpos.sum(), cneg.sum()
    best = None
    for f in range(F.shape[1]):
        order = np.argsort(F[:, f], kind="stable")
        v = F[order, f]
        cut = np.flatnonzero(v[:-1] < v[1:])
        if cut.size == 0:
            continue
        lp = np.cumsum(cpos[order])[cut]
        ln = np.cumsum(cneg[order])[cut]
        err = np.minimum(lp, ln) + np.minimum(TP - lp, TN - ln)
        b = int(np.argmin(err))
        if best is None or err[b] < best[0] - tol:
            best = (float(err[b]), f, 0.5 * (v[cut[b]] + v[cut[b] + 1]), "axis")
    return best


def _straddle_search(F, cpos, cneg, tol):
    h = F.shape[1] // 2
    TP, TN = cpos.sum(), cneg.sum()
    best = None
    for i in range(h):
        hi, lo = F[:, i], F[:, i + h]
        vals = np.unique(np.concatenate([hi, lo]))
        if vals.size < 2:
            continue
        A = 0.5 * (vals[:-1] + vals[1:])

        def below(col):
            # weighted cost mass of rows with col < A, for every candidate A
            o = np.argsort(col, kind="stable")
            k = np.searchsorted(col[o], A, side="left")
            cp = np.concatenate([[0.0], np.cumsum(cpos[o])])
            cn = np.concatenate([[0.0], np.cumsum(cneg[o])])
            return cp[k], cn[k]

        lo_p, lo_n = below(lo)
        hi_p, hi_n = below(hi)
        ip, inn = lo_p - hi_p, lo_n - hi_n
        err = np.minimum(ip, inn) + np.minimum(TP - ip, TN - inn)
        b = int(np.argmin(err))
        if best is None or err[b] < best[0] - tol:
            best = (float(err[b]), i, float(A[b]), "straddle")
    return best


def fit_split(features, z, p, family="tree", leaf_depth=5, weights=None, min_rows=8):
    """Greedy cost-sensitive classifier on one cell's rows.

    ``p`` is the cost of a false positive and ``1 - p`` the cost of a false
    negative.  ``min_rows`` bounds the size of nodes split below the root.
    """
    F = np.asarray(features, dtype=float)
    z = np.asarray(z)
    w = np.ones(len(z)) if weights is None else np.asarray(weights, dtype=float)
    if family not in FAMILIES:
        raise ValueError(f"unknown leaf family {family!r}")
    if leaf_depth < 1:
        raise ValueError("leaf depth must be at least 1")
    if not 0.0 < p < 1.0:
        raise ValueError("cost p must lie strictly between 0 and 1")
    if not (np.any(z == 1) and np.any(z == -1)):
        raise ValueError("cannot split a pure slice")
    if family == "straddle" and F.shape[1] % 2:
        raise ValueError("straddle splits need paired max/min features")
    depth = 1 if family == "stump" else leaf_depth
    search = _straddle_search if family == "straddle" else _axis_search
    cpos, cneg = split_costs(z, w, p)
    tol = 1e-12 * (cpos.sum() + cneg.sum())

    def grow(idx, depth_left, is_root):
        P, N = cpos[idx].sum(), cneg[idx].sum()
        leaf = Leaf(1 if N < P else -1)
        if depth_left == 0 or P == 0 or N == 0 or (not is_root and len(idx) < min_rows):
            return leaf
        best = search(F[idx], cpos[idx], cneg[idx], tol)
        if best is None or best[0] >= min(P, N) - tol:
            return leaf
        _, f, thr, kind = best
        node = Node(f, thr, None, None, kind)
        m = _goes_left(node, F[idx])
        return Node(f, thr, grow(idx[m], depth_left - 1, False),
                    grow(idx[~m], depth_left - 1, False), kind)

    return SymClassifier(grow(np.arange(len(z)), depth, True), family, F.shape[1])


def weighted_error(clf, features, z, p, weights=None):
    """Cost-sensitive empirical error of ``clf`` on the given rows."""
    z = np.asarray(z)
    w = np.ones(len(z)) if weights is None else np.asarray(weights, dtype=float)
    pred = clf.predict_many(features)
    cpos, cneg = split_costs(z, w, p)
    return float(cpos[pred == -1].sum() + cneg[pred == 1].sum())
