"""Row supports and hard-thresholding projections.

The thresholding operators here keep the k entries (or rows) of largest
magnitude (or Euclidean row norm), with ties broken toward the smaller
index so results are deterministic.  The atom set is the canonical basis
throughout, which makes these projections exact best approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, row_norms

__all__ = [
    "RowSupport",
    "top_k_indices",
    "top_k_rows",
    "project_rows",
    "support_union",
    "row_support",
]


@dataclass(frozen=True)
class RowSupport:
    """A sorted, duplicate-free set of row indices inside [0, ambient)."""

    indices: tuple
    ambient: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "ambient", int(self.ambient))
        if self.ambient < 0:
            raise ValueError("ambient must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.ambient):
            raise ValueError(
                f"indices must lie in [0, {self.ambient}), got {idx[0]}..{idx[-1]}"
            )

    @classmethod
    def from_iterable(cls, indices, ambient: int) -> "RowSupport":
        return cls(tuple(sorted({int(i) for i in indices})), ambient)

    @classmethod
    def empty(cls, ambient: int) -> "RowSupport":
        return cls((), ambient)

    @classmethod
    def full(cls, ambient: int) -> "RowSupport":
        return cls(tuple(range(ambient)), ambient)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return int(i) in set(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


def _top_k(scores: np.ndarray, k: int, ambient: int) -> RowSupport:
    if k < 0 or k > ambient:
        raise ValueError(f"k={k} out of range [0, {ambient}]")
    if k == 0:
        return RowSupport.empty(ambient)
    # stable sort on the negated scores keeps the smaller index on ties
    order = np.argsort(-scores, kind="stable")
    return RowSupport(tuple(sorted(order[:k].tolist())), ambient)


def top_k_indices(w, k: int) -> RowSupport:
    """Indices of the k largest entries of w in absolute value."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("w must be a 1-D vector")
    return _top_k(np.abs(w), k, w.size)


def top_k_rows(X, k: int) -> RowSupport:
    """Indices of the k rows of X with largest Euclidean norm."""
    X = as_matrix(X)
    return _top_k(row_norms(X), k, X.shape[0])


def project_rows(X, support: RowSupport) -> np.ndarray:
    """Copy the rows in the support, zero all others."""
    X = as_matrix(X)
    if support.ambient != X.shape[0]:
        raise ValueError(
            f"support ambient {support.ambient} != matrix rows {X.shape[0]}"
        )
    out = np.zeros_like(X)
    if len(support):
        idx = support.as_array()
        out[idx] = X[idx]
    return out


def support_union(a: RowSupport, b: RowSupport) -> RowSupport:
    if a.ambient != b.ambient:
        raise ValueError(f"ambient mismatch: {a.ambient} != {b.ambient}")
    return RowSupport.from_iterable(a.indices + b.indices, a.ambient)


def row_support(X, tol: float = 0.0) -> RowSupport:
    """Indices of rows with norm strictly greater than tol.

    With tol = 0 the size of the result is the row sparsity of X.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    X = as_matrix(X)
    keep = np.flatnonzero(row_norms(X) > tol)
    return RowSupport(tuple(keep.tolist()), X.shape[0])
