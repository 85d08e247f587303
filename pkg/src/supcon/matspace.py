"""Matrix-space primitives: minors vectors, rank-one structure, dimension bookkeeping.

Points of R^{N x n} are the arguments of every supremand in this package.  The
two facts this module owns are

* the minors vector ``T(xi) = (xi, all 2x2 minors, ..., the top minor)`` of
  length ``tau(N, n) = sum_s C(N,s) C(n,s)``, which is affine along rank-one
  segments, and
* a robust rank-one test based on singular values.

Minor ordering is lexicographic over (row index set, column index set), with
the minor size s increasing; consequently the first N*n components of the
minors vector are the matrix entries themselves in row-major order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MatrixPoint",
    "MinorVector",
    "RankOneDirection",
    "tau",
    "minors",
    "minors_array",
    "minors_batch",
    "is_rank_one_connected",
    "rank_one_matrix",
    "second_singular_ratio",
]

#: Default relative tolerance for the singular-value rank test.
RANK_TOL = 1e-9


@dataclass(frozen=True)
class MatrixPoint:
    """A point xi of R^{N x n}, stored dense row-major."""

    rows: int
    cols: int
    entries: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("matrix dimensions must be positive")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} entries, got {len(self.entries)}"
            )
        if not all(math.isfinite(e) for e in self.entries):
            raise ValueError("matrix entries must be finite")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "MatrixPoint":
        a = np.asarray(arr, dtype=float)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(a.shape[0], a.shape[1], tuple(float(x) for x in a.ravel()))

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float).reshape(self.rows, self.cols)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True)
class MinorVector:
    """All minors of a matrix, ordered by size then lexicographic index sets."""

    dims: tuple[int, int]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        expected = tau(self.dims[0], self.dims[1])
        if len(self.values) != expected:
            raise ValueError(f"expected {expected} minors, got {len(self.values)}")

    def to_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


@dataclass(frozen=True)
class RankOneDirection:
    """A rank-one matrix direction a (x) nu with |nu| = 1 and a != 0."""

    a: tuple[float, ...]
    nu: tuple[float, ...]

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        nu = np.asarray(self.nu, dtype=float)
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(nu)):
            raise ValueError("direction components must be finite")
        if np.linalg.norm(a) == 0.0:
            raise ValueError("left vector a must be nonzero")
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("nu must be a unit vector (within 1e-12)")

    @classmethod
    def from_vectors(cls, a, nu) -> "RankOneDirection":
        nu = np.asarray(nu, dtype=float)
        nrm = np.linalg.norm(nu)
        if nrm == 0.0:
            raise ValueError("nu must be nonzero")
        return cls(tuple(float(x) for x in np.asarray(a, dtype=float)),
                   tuple(float(x) for x in nu / nrm))


def tau(N: int, n: int) -> int:
    """Length of the minors vector: sum_{s=1}^{min(n,N)} C(N,s) C(n,s)."""
    if N < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    return sum(math.comb(N, s) * math.comb(n, s) for s in range(1, min(N, n) + 1))


def _index_sets(N: int, n: int):
    """Yield (s, rows, cols) in the canonical minor ordering."""
    for s in range(1, min(N, n) + 1):
        for rows in itertools.combinations(range(N), s):
            for cols in itertools.combinations(range(n), s):
                yield s, rows, cols


def minors_array(mat: np.ndarray) -> np.ndarray:
    """Minors vector of a 2-d array, canonical ordering, as a flat array."""
    mat = np.asarray(mat, dtype=float)
    N, n = mat.shape
    out = np.empty(tau(N, n))
    k = 0
    for s, rows, cols in _index_sets(N, n):
        sub = mat[np.ix_(rows, cols)]
        if s == 1:
            out[k] = sub[0, 0]
        elif s == 2:  # exact 2x2 determinant, no LU roundoff
            out[k] = sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0]
        else:
            out[k] = float(np.linalg.det(sub))
        k += 1
    return out


def minors(xi: MatrixPoint) -> MinorVector:
    """All s x s minors of xi for s = 1..min(N, n); see module docstring for ordering."""
    vals = minors_array(xi.to_array())
    return MinorVector(dims=xi.dims, values=tuple(float(v) for v in vals))


def minors_batch(arr: np.ndarray) -> np.ndarray:
    """Minors vectors of a stack of matrices: (..., N, n) -> (..., tau(N, n))."""
    arr = np.asarray(arr, dtype=float)
    N, n = arr.shape[-2:]
    comps = []
    for s, rows, cols in _index_sets(N, n):
        sub = arr[..., rows, :][..., :, cols]
        if s == 1:
            comps.append(sub[..., 0, 0])
        elif s == 2:
            comps.append(sub[..., 0, 0] * sub[..., 1, 1]
                         - sub[..., 0, 1] * sub[..., 1, 0])
        else:
            comps.append(np.linalg.det(sub))
    return np.stack(comps, axis=-1)


def second_singular_ratio(diff: np.ndarray) -> tuple[float, float]:
    """Return (sigma_1, sigma_2 / sigma_1) of a matrix; sigma_2 = 0 for vectors."""
    diff = np.asarray(diff, dtype=float)
    s = np.linalg.svd(diff, compute_uv=False)
    s1 = float(s[0])
    if s1 == 0.0:
        return 0.0, 0.0
    s2 = float(s[1]) if len(s) > 1 else 0.0
    return s1, s2 / s1


def is_rank_one_connected(xi: MatrixPoint | np.ndarray,
                          eta: MatrixPoint | np.ndarray,
                          tol: float = RANK_TOL) -> bool:
    """True iff xi - eta has numerical rank exactly one.

    The test is relative: the second singular value of the difference must not
    exceed ``tol`` times the first, and the first must exceed ``tol`` (so the
    zero difference is rank zero, not rank one).
    """
    a = xi.to_array() if isinstance(xi, MatrixPoint) else np.asarray(xi, dtype=float)
    b = eta.to_array() if isinstance(eta, MatrixPoint) else np.asarray(eta, dtype=float)
    if a.shape != b.shape:
        raise ValueError("matrices must have the same dimensions")
    s1, ratio = second_singular_ratio(a - b)
    return s1 > tol and ratio <= tol


def rank_one_matrix(d: RankOneDirection) -> MatrixPoint:
    """The outer product a (x) nu as a matrix point, (a x nu)_{ij} = a_i nu_j."""
    a = np.asarray(d.a, dtype=float)
    nu = np.asarray(d.nu, dtype=float)
    return MatrixPoint.from_array(np.outer(a, nu))
