"""Labeled pair batches and their empirical class-conditional rates."""

import csv
from dataclasses import dataclass

import numpy as np

from .core import derive_rng
from .transform import SymmetricTransform, apply


class UndefinedRateError(ValueError):
    """No rows carry the requested pair label."""


@dataclass(frozen=True)
class PairBatch:
    features: np.ndarray
    z: np.ndarray
    weights: np.ndarray = None
    transform: str = "diag"
    x: np.ndarray = None
    xp: np.ndarray = None

    def __post_init__(self):
        F = np.array(self.features, dtype=float)
        z = np.array(self.z, dtype=np.int8)
        if F.ndim != 2:
            raise ValueError("features must be 2-d")
        if z.shape != (F.shape[0],) or not np.all(np.abs(z) == 1):
            raise ValueError("z must hold one label in {-1, +1} per row")
        w = np.ones(len(z)) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != z.shape or np.any(w < 0):
            raise ValueError("weights must be nonnegative, one per row")
        for name, arr in (("features", F), ("z", z), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.z)

    @property
    def n_plus(self):
        return int(np.count_nonzero(self.z == 1))

    @property
    def n_minus(self):
        return int(np.count_nonzero(self.z == -1))

    @property
    def dim(self):
        return self.features.shape[1]

    def subset(self, idx):
        sel = lambda a: None if a is None else a[idx]
        return PairBatch(self.features[idx], self.z[idx], self.weights[idx], self.transform,
                         sel(self.x), sel(self.xp))


def n_index_pairs(n):
    return n * (n - 1) // 2


def unrank_pairs(k, n):
    """Map linear ranks in ``range(n*(n-1)//2)`` to (i, j), i < j, row-major."""
    k = np.asarray(k, dtype=np.int64)
    # rows before i hold i*n - i*(i+1)/2 pairs; invert the quadratic, then fix rounding
    m = n_index_pairs(n)
    i = n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    start = lambda r: r * n - r * (r + 1) // 2
    i = np.where(start(i) > k, i - 1, i)
    i = np.where(start(i + 1) <= k, i + 1, i)
    j = k - start(i) + i + 1
    assert np.all((0 <= i) & (i < j) & (j < n)) and np.all(k < m)
    return i, j


def build_pairs(dataset, transform, budget=None, seed=0):
    """All i<j pairs of ``dataset``, or ``budget`` of them drawn without replacement."""
    n = dataset.n
    if n < 2:
        raise ValueError("need at least two instances to form pairs")
    if budget is not None and budget < 1:
        raise ValueError("pair budget must be positive")
    if isinstance(transform, str):
        transform = SymmetricTransform(transform, dataset.q)
    total = n_index_pairs(n)
    if budget is None or budget >= total:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = derive_rng(seed, "pairs")
        ranks = np.sort(rng.choice(total, size=budget, replace=False))
        i, j = unrank_pairs(ranks, n)
    x, xp = dataset.X[i], dataset.X[j]
    z = np.where(dataset.y[i] == dataset.y[j], 1, -1)
    return PairBatch(apply(transform, x, xp), z, transform=transform.variant, x=x, xp=xp)


def pairs_from_raw(x, xp, z, transform, weights=None):
    x = np.asarray(x, dtype=float)
    if isinstance(transform, str):
        transform = SymmetricTransform(transform, x.shape[1])
    return PairBatch(apply(transform, x, xp), z, weights, transform.variant, x, np.asarray(xp, float))


def class_mass(batch, sigma):
    return float(batch.weights[batch.z == sigma].sum())


def empirical_rate(batch, membership, sigma):
    """Weighted share of label-``sigma`` rows for which ``membership`` holds.

    ``membership`` is a boolean mask over rows or a predicate taking the
    feature matrix and returning one.
    """
    if callable(membership):
        membership = membership(batch.features)
    membership = np.broadcast_to(np.asarray(membership, dtype=bool), batch.z.shape)
    cls = batch.z == sigma
    total = batch.weights[cls].sum()
    if not np.any(cls) or total == 0:
        raise UndefinedRateError(f"no rows with z = {sigma:+d}")
    return float(batch.weights[cls & membership].sum() / total)


# ------------------------------------------------------------ pair CSV files

def pair_columns(q, features=False):
    cols = [f"x_{i}" for i in range(1, q + 1)] + [f"xp_{i}" for i in range(1, q + 1)]
    if features:
        cols += [f"f_{i}" for i in range(1, 2 * q + 1)]
    return cols + ["z"]


def write_pair_csv(path, x, xp, z, features=None):
    """Raw pair rows x_1..x_q, xp_1..xp_q (optionally f_1..f_2q) and z."""
    x, xp = np.asarray(x, dtype=float), np.asarray(xp, dtype=float)
    q = x.shape[1]
    blocks = [x, xp] if features is None else [x, xp, np.asarray(features, dtype=float)]
    body = np.hstack(blocks)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(pair_columns(q, features is not None))
        for row, zz in zip(body, z):
            w.writerow([repr(float(v)) for v in row] + [int(zz)])
    return path


def is_pair_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return "z" in [h.strip() for h in header]


def read_pair_csv(path):
    """Pairs from CSV as (x, xp, F, z); raw or feature blocks may be None.

    A file needs the z column plus raw x_i/xp_i columns, transformed f_i
    columns, or both.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if "z" not in header:
            raise ValueError(f"{path}: pair file needs a 'z' column")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"{path}: row {lineno} has a non-numeric cell") from None
    if not rows:
        raise ValueError(f"{path}: no pair rows")
    data = np.array(rows)
    col = {h: j for j, h in enumerate(header)}

    def block(prefix):
        names = []
        i = 1
        while f"{prefix}_{i}" in col:
            names.append(f"{prefix}_{i}")
            i += 1
        return data[:, [col[n] for n in names]] if names else None

    x, xp, F = block("x"), block("xp"), block("f")
    if (x is None) != (xp is None) or (x is not None and x.shape != xp.shape):
        raise ValueError(f"{path}: x_i and xp_i columns must come in matching sets")
    if x is None and F is None:
        raise ValueError(f"{path}: no x_i/xp_i or f_i feature columns")
    z = data[:, col["z"]]
    if not np.all(np.isin(z, (-1, 1))):
        raise ValueError(f"{path}: z must be -1 or +1")
    return x, xp, F, z.astype(np.int8)


def load_pairs(path, transform):
    """PairBatch from a pair CSV; f_i columns are used as-is when no raw columns exist."""
    x, xp, F, z = read_pair_csv(path)
    if x is not None:
        return pairs_from_raw(x, xp, z, transform)
    variant = transform.variant if isinstance(transform, SymmetricTransform) else transform
    if F.shape[1] % 2:
        raise ValueError(f"{path}: f_i columns must number 2q")
    return PairBatch(F, z, transform=variant)
