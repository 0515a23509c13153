"""Swap-invariant pair featurizations.

``diag`` projects (x, x') on the diagonal subspace and the absolute value of
the anti-diagonal projection, both in orthonormal coordinates.  ``minmax``
stacks the element-wise maximum and minimum.  Both are built from symmetric
floating-point primitives, so f(x, x') == f(x', x) bit for bit.
"""

from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)
VARIANTS = ("diag", "minmax")


@dataclass(frozen=True)
class SymmetricTransform:
    variant: str
    q: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown transform {self.variant!r}; choose from {VARIANTS}")
        if self.q < 1:
            raise ValueError("input dimension must be positive")

    @property
    def out_dim(self):
        return 2 * self.q

    def __call__(self, x, xp):
        return apply(self, x, xp)


def _check(t, x, xp):
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != xp.shape or x.shape[-1] != t.q:
        raise ValueError(f"pair dimension mismatch: {x.shape} vs {xp.shape}, transform q={t.q}")
    return x, xp


def apply(t, x, xp):
    """Map pairs (x, x') of shape (..., q) to features of shape (..., 2q)."""
    x, xp = _check(t, x, xp)
    if t.variant == "diag":
        head = (x + xp) / SQRT2
        tail = np.abs(x - xp) / SQRT2
    else:
        head = np.maximum(x, xp)
        tail = np.minimum(x, xp)
    return np.concatenate([head, tail], axis=-1)


def apply_signed(t, x, xp):
    """The diag map without the absolute value: an orthogonal change of basis."""
    x, xp = _check(t, x, xp)
    return np.concatenate([(x + xp) / SQRT2, (x - xp) / SQRT2], axis=-1)
