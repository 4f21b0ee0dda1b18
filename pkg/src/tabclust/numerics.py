"""Dense linear algebra primitives used by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 (row-major,
C order). Only the few operations the clustering head needs are provided
here: a Cholesky factorization, triangular solves and a stabilized row
softmax, plus a seeded random source.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteValue,
    NotPositiveDefinite,
    NotSquare,
    NotSymmetric,
)

SYMMETRY_TOL = 1e-10


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array, widening float32 input."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        i, j = np.argwhere(~np.isfinite(m))[0]
        raise NonFiniteValue(f"{name} has a non-finite entry at row {i}, col {j}")
    return np.ascontiguousarray(m)


@dataclass(frozen=True)
class LowerTriangular:
    """Lower-triangular factor with a strictly positive diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise NotSquare(f"triangular factor must be square, got {e.shape}")
        if np.any(np.triu(e, 1) != 0.0):
            raise ValueError("entries above the diagonal must be exactly zero")
        if np.any(np.diag(e) <= 0.0):
            raise NotPositiveDefinite("triangular factor needs a positive diagonal")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self):
        return self.entries.shape[0]


def cholesky(a):
    """Factor a symmetric positive-definite matrix as ``L @ L.T``.

    Row-by-row (Cholesky-Banachiewicz) elimination. Raises
    ``NotPositiveDefinite`` as soon as a pivot is not strictly positive.
    """
    a = as_matrix(a, "A")
    n, m = a.shape
    if n != m:
        raise NotSquare(f"A must be square, got {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
        raise NotSymmetric("A is not symmetric within 1e-10")
    L = np.zeros_like(a)
    for i in range(n):
        # off-diagonal entries of row i, left to right
        for j in range(i):
            s = a[i, j] - np.dot(L[i, :j], L[j, :j])
            L[i, j] = s / L[j, j]
        pivot = a[i, i] - np.dot(L[i, :i], L[i, :i])
        if not pivot > 0.0:
            raise NotPositiveDefinite(f"pivot {i} is {pivot:.3g}")
        L[i, i] = np.sqrt(pivot)
    return LowerTriangular(L)


def solve_lower_triangular(L, b, transpose=False):
    """Solve ``L x = b`` by forward substitution.

    With ``transpose=True`` solves ``L.T x = b`` by back substitution
    instead. ``b`` may be a vector or a matrix whose columns are separate
    right-hand sides.
    """
    T = L.entries if isinstance(L, LowerTriangular) else np.asarray(L, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = T.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatch(f"factor has dim {n}, right-hand side has {b.shape[0]} rows")
    x = np.empty_like(b)
    if not transpose:
        for i in range(n):
            x[i] = (b[i] - T[i, :i] @ x[:i]) / T[i, i]
    else:
        U = T.T
        for i in range(n - 1, -1, -1):
            x[i] = (b[i] - U[i, i + 1:] @ x[i + 1:]) / U[i, i]
    return x


def row_softmax(m):
    """Softmax over each row, shifted by the row maximum before ``exp``."""
    m = np.asarray(m, dtype=np.float64)
    e = np.exp(m - m.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def make_rng(seed, stream=None):
    """Seeded PCG64 generator; identical arguments give identical streams.

    ``stream`` selects an independent sub-stream of the same seed, so phases
    of a run can draw numbers without depending on each other.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    key = int(seed) & 0xFFFFFFFFFFFFFFFF
    if stream is not None:
        key = np.random.SeedSequence([key, int(stream)])
    return np.random.Generator(np.random.PCG64(key))
