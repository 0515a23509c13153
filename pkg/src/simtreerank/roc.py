"""Piecewise-linear ROC curves, AUC and the L1 / sup-norm curve distances."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class RocCurve:
    """Knots (alpha, beta) from (0, 0) to (1, 1), nondecreasing in both.

    Several knots may share an alpha (vertical segments); ``value`` then
    resolves the jump from the left or the right.
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or a.size < 2:
            raise ValueError("need matching 1-d knot arrays with at least two knots")
        tol = 1e-9
        if abs(a[0]) > tol or abs(b[0]) > tol or abs(a[-1] - 1) > tol or abs(b[-1] - 1) > tol:
            raise ValueError("curve must start at (0, 0) and end at (1, 1)")
        if np.any(np.diff(a) < -tol) or np.any(np.diff(b) < -tol):
            raise ValueError("knots must be nondecreasing")
        a, b = np.maximum.accumulate(a), np.maximum.accumulate(b)
        a[0] = b[0] = 0.0
        a[-1] = b[-1] = 1.0
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_knots(cls, knots):
        k = np.asarray(knots, dtype=float)
        return cls(k[:, 0], k[:, 1])

    @property
    def knots(self):
        return np.column_stack([self.alpha, self.beta])

    def value(self, at, side="right"):
        """ROC(alpha), taking the upper (``right``) or lower (``left``) end of jumps."""
        at = np.clip(np.asarray(at, dtype=float), 0.0, 1.0)
        a, b = self.alpha, self.beta
        if side == "right":
            i = np.clip(np.searchsorted(a, at, side="right") - 1, 0, a.size - 2)
        else:
            i = np.clip(np.searchsorted(a, at, side="left") - 1, 0, a.size - 2)
        lo, hi = a[i], a[i + 1]
        span = hi - lo
        t = np.divide(at - lo, span, out=np.zeros_like(at), where=span > 0)
        v = b[i] + t * (b[i + 1] - b[i])
        if side == "right":
            # an exact hit on a knot alpha takes the last knot with that alpha
            j = np.searchsorted(a, at, side="right") - 1
            hit = a[np.clip(j, 0, a.size - 1)] == at
            v = np.where(hit, b[np.clip(j, 0, a.size - 1)], v)
        else:
            j = np.searchsorted(a, at, side="left")
            hit = a[np.clip(j, 0, a.size - 1)] == at
            v = np.where(hit, b[np.clip(j, 0, a.size - 1)], v)
        return v

    __call__ = value

    def reduced(self, tol=0.0):
        """Drop knots that repeat their predecessor (within ``tol``)."""
        k = self.knots
        keep = np.ones(len(k), dtype=bool)
        keep[1:] = np.any(np.abs(np.diff(k, axis=0)) > tol, axis=1)
        k = k[keep]
        if len(k) == 1:
            k = np.vstack([k, [1.0, 1.0]])
        # the endpoint is pinned to (1, 1) by the constructor
        k[-1] = 1.0
        return RocCurve(k[:, 0], k[:, 1])


def roc_from_scores(scores, z, weights=None):
    """Empirical ROC of a scorer; tied scores form one straight segment."""
    s = np.asarray(scores, dtype=float)
    z = np.asarray(z)
    w = np.ones(s.shape) if weights is None else np.asarray(weights, dtype=float)
    if s.shape != z.shape or s.ndim != 1:
        raise ValueError("scores and labels must be matching 1-d arrays")
    pos = z == 1
    wp, wn = w[pos].sum(), w[~pos].sum()
    if wp == 0 or wn == 0:
        raise ValueError("ROC needs at least one positive and one negative")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(np.where(pos, w, 0.0)[order])
    fp = np.cumsum(np.where(pos, 0.0, w)[order])
    last = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    alpha = np.r_[0.0, fp[last] / wn]
    beta = np.r_[0.0, tp[last] / wp]
    return RocCurve(alpha, beta)


def auc(curve):
    """Trapezoid area under the knot polyline."""
    a, b = curve.alpha, curve.beta
    return float(np.sum(np.diff(a) * (b[1:] + b[:-1])) / 2.0)


def concordance_auc(scores, z):
    """Brute-force rate of concordant positive/negative pairs, ties counted half."""
    s = np.asarray(scores, dtype=float)
    z = np.asarray(z)
    sp, sn = s[z == 1][:, None], s[z == -1][None, :]
    return float(((sp > sn).sum() + 0.5 * (sp == sn).sum()) / (sp.size * sn.size))


def _breakpoints(a, b):
    return np.union1d(a.alpha, b.alpha)


def sup_dist(a, b):
    """Exact sup over alpha of |a(alpha) - b(alpha)|."""
    u = _breakpoints(a, b)
    right = np.abs(a.value(u, "right") - b.value(u, "right"))
    left = np.abs(a.value(u, "left") - b.value(u, "left"))
    return float(max(right.max(), left.max()))


def l1_dist(a, b):
    """Exact integral of |a - b| over [0, 1]."""
    u = _breakpoints(a, b)
    h = np.diff(u)
    g0 = (a.value(u, "right") - b.value(u, "right"))[:-1]
    g1 = (a.value(u, "left") - b.value(u, "left"))[1:]
    same = g0 * g1 >= 0
    denom = np.abs(g0) + np.abs(g1)
    crossing = np.divide(g0**2 + g1**2, 2.0 * denom, out=np.zeros_like(g0), where=denom > 0)
    area = np.where(same, 0.5 * (np.abs(g0) + np.abs(g1)), crossing)
    return float(np.sum(h * area))


def write_roc_csv(curve, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta"])
        for a, b in zip(curve.alpha, curve.beta):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def read_roc_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["alpha", "beta"]:
            raise ValueError(f"{path}: expected header 'alpha,beta'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise ValueError(f"{path}: row {lineno} is not a pair of numbers") from None
    if len(rows) < 2:
        raise ValueError(f"{path}: a curve needs at least two knots")
    return RocCurve.from_knots(rows)
