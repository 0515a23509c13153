"""Synthetic pair distributions with a known optimal ROC curve.

A random ground-truth tree of depth D_gt partitions the diag-transformed
pair space into L + 1 = 2^D_gt boxes.  Given the pair label z, a pair is
uniform on cell l with probability delta_l^z, where the positive masses decay
geometrically in l and the negative masses grow, so the likelihood ratio is
decreasing in the cell index.

Instances live in [0, 1]^q.  For each coordinate the diag map sends
(x_i, x'_i) to (s, d) = ((x_i + x'_i)/sqrt2, |x_i - x'_i|/sqrt2), a rotation
followed by a fold, and the image is the triangle 0 <= d <= min(s, sqrt2 - s).
A box cell is a product over coordinates of (s, d) rectangles cut by that
triangle, which gives exact cell probabilities and per-coordinate sampling.
"""

from dataclasses import dataclass

import numpy as np

from .core import derive_rng
from .pairs import pairs_from_raw
from .roc import RocCurve, auc
from .transform import SQRT2, SymmetricTransform, apply

MIN_CELL_PROB = 1e-4
REJECTION_BUDGET = 10**6
_CHUNK = 1 << 20


class DegenerateCellError(RuntimeError):
    """A cell is too thin to sample by rejection; regenerate the ground truth."""


def geometric_masses(delta, n_cells):
    """Positive and negative cell masses delta^(l/L) and delta^(-l/L), normalized."""
    L = n_cells - 1
    l = np.arange(n_cells)
    if L == 0:
        return np.ones(1), np.ones(1)
    plus = delta ** (l / L)
    minus = delta ** (-l / L)
    return plus / plus.sum(), minus / minus.sum()


def image_bounds(q):
    lo = np.zeros(2 * q)
    hi = np.r_[np.full(q, SQRT2), np.full(q, 1.0 / SQRT2)]
    return lo, hi


def strip_area(s_lo, s_hi, d_lo, d_hi):
    """Area in the (x_i, x'_i) unit square of {s in [s_lo, s_hi], d in [d_lo, d_hi]}."""
    if s_hi <= s_lo or d_hi <= d_lo:
        return 0.0
    knots = [s_lo, s_hi, SQRT2 / 2]
    for c in (d_lo, d_hi):
        knots += [c, SQRT2 - c]
    s = np.unique(np.clip(knots, s_lo, s_hi))
    h = np.minimum(s, SQRT2 - s)
    g = np.maximum(0.0, np.minimum(d_hi, h) - d_lo)
    # the fold d = |t| is two-to-one, hence the factor 2
    return float(2.0 * np.sum(np.diff(s) * (g[1:] + g[:-1]) / 2.0))


def _tree_boxes(q, depth, feature, threshold):
    lo0, hi0 = image_bounds(q)
    boxes = [(lo0, hi0)]
    for node in range(2**depth - 1):
        lo, hi = boxes[node]
        f, t = feature[node], threshold[node]
        lhi = hi.copy()
        lhi[f] = min(hi[f], t)
        rlo = lo.copy()
        rlo[f] = max(lo[f], t)
        boxes += [(lo, lhi), (rlo, hi)]
    first = 2**depth - 1
    leaves = boxes[first:]
    return np.array([b[0] for b in leaves]), np.array([b[1] for b in leaves])


@dataclass(frozen=True)
class SyntheticModel:
    q: int
    depth: int
    feature: np.ndarray
    threshold: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    p_plus: float
    noise: float

    def __post_init__(self):
        for name in ("feature", "threshold", "delta_plus", "delta_minus"):
            dtype = np.int64 if name == "feature" else float
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.feature.shape != (2**self.depth - 1,) or self.threshold.shape != self.feature.shape:
            raise ValueError("ground-truth tree must be fully grown")
        if self.delta_plus.shape != (2**self.depth,) or self.delta_minus.shape != (2**self.depth,):
            raise ValueError("need one mass per cell")
        lo, hi = _tree_boxes(self.q, self.depth, self.feature, self.threshold)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)

    transform = "diag"

    @property
    def n_cells(self):
        return 2**self.depth

    @property
    def ratio(self):
        return self.delta_plus / self.delta_minus

    def cell_of_features(self, F):
        F = np.asarray(F, dtype=float)
        node = np.zeros(len(F), dtype=np.int64)
        for _ in range(self.depth):
            go_left = F[np.arange(len(F)), self.feature[node]] <= self.threshold[node]
            node = np.where(go_left, 2 * node + 1, 2 * node + 2)
        return node - (2**self.depth - 1)

    def cell_of(self, x, xp):
        return self.cell_of_features(apply(SymmetricTransform("diag", self.q), x, xp))

    def cell_probs(self):
        """Probability of each cell under uniform (x, x') on [0, 1]^(2q)."""
        q = self.q
        out = np.ones(self.n_cells)
        for l in range(self.n_cells):
            lo, hi = self.box_lo[l], self.box_hi[l]
            for i in range(q):
                out[l] *= strip_area(lo[i], hi[i], lo[i + q], hi[i + q])
        return out

    def score_features(self, F):
        return self.ratio[self.cell_of_features(F)]

    def score_pairs(self, x, xp):
        return self.ratio[self.cell_of(x, xp)]

    def to_dict(self):
        roc = optimal_roc(self)
        return {"kind": "synthetic-ground-truth", "transform": "diag",
                "ground_truth": {"q": self.q, "depth": self.depth,
                                 "feature": self.feature.tolist(),
                                 "threshold": self.threshold.tolist(),
                                 "delta_plus": self.delta_plus.tolist(),
                                 "delta_minus": self.delta_minus.tolist(),
                                 "p_plus": self.p_plus, "noise": self.noise},
                "knots": roc.knots.tolist(),
                "metadata": {"auc_star": auc(roc)}}

    @classmethod
    def from_dict(cls, doc):
        g = doc["ground_truth"]
        return cls(int(g["q"]), int(g["depth"]), g["feature"], g["threshold"], g["delta_plus"],
                   g["delta_minus"], float(g["p_plus"]), float(g["noise"]))


def gen_ground_truth(depth, q=3, delta=0.01, p_plus=0.5, seed=0,
                     min_cell_prob=MIN_CELL_PROB, max_tries=10_000):
    """Draw a random ground-truth tree whose cells are all reasonably likely."""
    if depth < 1:
        raise ValueError("ground-truth depth must be at least 1")
    if q < 1:
        raise ValueError("dimension must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("noise delta must lie in (0, 1)")
    if not 0.0 < p_plus < 1.0:
        raise ValueError("p_plus must lie in (0, 1)")
    rng = derive_rng(seed, "ground-truth")
    plus, minus = geometric_masses(delta, 2**depth)
    n_internal = 2**depth - 1
    for _ in range(max_tries):
        feature = np.empty(n_internal, dtype=np.int64)
        threshold = np.empty(n_internal)
        lo0, hi0 = image_bounds(q)
        boxes = {0: (lo0, hi0)}
        for node in range(n_internal):
            lo, hi = boxes[node]
            f = int(rng.integers(2 * q))
            t = float(rng.uniform(lo[f], hi[f]))
            feature[node], threshold[node] = f, t
            lhi, rlo = hi.copy(), lo.copy()
            lhi[f], rlo[f] = t, t
            boxes[2 * node + 1] = (lo, lhi)
            boxes[2 * node + 2] = (rlo, hi)
        model = SyntheticModel(q, depth, feature, threshold, plus, minus, p_plus, delta)
        if model.cell_probs().min() >= min_cell_prob:
            return model
    raise DegenerateCellError(f"no ground-truth tree with all cells above {min_cell_prob} "
                              f"in {max_tries} draws")


def optimal_roc(model):
    """Knots of ROC*: cells sorted by decreasing delta+/delta- (ties by index)."""
    order = np.lexsort((np.arange(model.n_cells), -model.ratio))
    return RocCurve(np.r_[0.0, np.cumsum(model.delta_minus[order])],
                    np.r_[0.0, np.cumsum(model.delta_plus[order])])


def _sample_strip(rng, n, s_lo, s_hi, d_lo, d_hi):
    """n points (u, v) uniform on one coordinate's slice of a cell."""
    s_out, d_out = np.empty(n), np.empty(n)
    got, dry = 0, 0
    width = (s_hi - s_lo) * (d_hi - d_lo)
    accept = strip_area(s_lo, s_hi, d_lo, d_hi) / 2.0 / width if width > 0 else 0.0
    while got < n:
        m = int(min(_CHUNK, max(64, 1.2 * (n - got) / max(accept, 1e-9))))
        s = rng.uniform(s_lo, s_hi, m)
        d = rng.uniform(d_lo, d_hi, m)
        ok = d <= np.minimum(s, SQRT2 - s)
        k = min(int(ok.sum()), n - got)
        if k == 0:
            dry += m
            if dry >= REJECTION_BUDGET:
                raise DegenerateCellError(
                    "rejection budget exhausted for a cell; regenerate the ground truth")
            continue
        dry = 0
        s_out[got:got + k] = s[ok][:k]
        d_out[got:got + k] = d[ok][:k]
        got += k
    t = np.where(rng.random(n) < 0.5, d_out, -d_out)
    u = np.clip((s_out + t) / SQRT2, 0.0, 1.0)
    v = np.clip((s_out - t) / SQRT2, 0.0, 1.0)
    return u, v


def _sample_cell(model, rng, l, n):
    q = model.q
    lo, hi = model.box_lo[l], model.box_hi[l]
    x = np.empty((0, q))
    xp = np.empty((0, q))
    while len(x) < n:
        need = n - len(x)
        cx, cxp = np.empty((need, q)), np.empty((need, q))
        for i in range(q):
            cx[:, i], cxp[:, i] = _sample_strip(rng, need, lo[i], hi[i], lo[i + q], hi[i + q])
        # boundary round-off can move a point across a threshold; drop those
        ok = model.cell_of(cx, cxp) == l
        x = np.vstack([x, cx[ok]])
        xp = np.vstack([xp, cxp[ok]])
    return x, xp


def draw_pairs(model, n_pairs, rng):
    """Raw pairs with labels and the cell each was drawn from."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    z = np.where(rng.random(n_pairs) < model.p_plus, 1, -1)
    u = rng.random(n_pairs)
    cell = np.where(z == 1,
                    np.searchsorted(np.cumsum(model.delta_plus), u * model.delta_plus.sum(), side="right"),
                    np.searchsorted(np.cumsum(model.delta_minus), u * model.delta_minus.sum(), side="right"))
    cell = np.minimum(cell, model.n_cells - 1)
    x = np.empty((n_pairs, model.q))
    xp = np.empty((n_pairs, model.q))
    for l in range(model.n_cells):
        idx = np.flatnonzero(cell == l)
        if idx.size:
            x[idx], xp[idx] = _sample_cell(model, rng, l, idx.size)
    return x, xp, z, cell


def sample_pairs(model, n_pairs, seed=0, transform="diag", purpose="sample"):
    """Labeled pair batch drawn from the model, featurized by ``transform``."""
    rng = derive_rng(seed, purpose)
    x, xp, z, _ = draw_pairs(model, n_pairs, rng)
    return pairs_from_raw(x, xp, z, transform)


def oracle_score(model, x, xp):
    """delta+/delta- of the pair's cell: an optimal similarity."""
    x = np.asarray(x, dtype=float)
    s = model.score_pairs(np.atleast_2d(x), np.atleast_2d(xp))
    return float(s[0]) if x.ndim == 1 else s
