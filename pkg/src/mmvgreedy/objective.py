"""The multiple-measurement least-squares objective and its components.

For a sensing matrix A (m x n) and measurements Y (m x L) the objective is

    F(X) = (1 / 2m) * ||Y - A X||_F^2

viewed as the mean of m components, one per measurement row:

    f_i(X) = (1 / 2) * ||Y[i] - A[i] X||_2^2.

Stochastic solvers consume this through batch gradients (the mean gradient
over a set of rows) and support-restricted minimization.  The objective is
separable across signal columns, which is what the concatenated per-column
solvers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import RngStream, as_matrix, least_squares_solve
from .sparsity import RowSupport

__all__ = ["MmvObjective", "BatchPlan", "batch_partition"]


@dataclass(frozen=True)
class BatchPlan:
    """A partition of component indices {0..M-1} into consecutive batches.

    Every batch has size batch_size except possibly the last one.
    """

    batch_size: int
    batches: tuple

    @property
    def count(self) -> int:
        return len(self.batches)


def batch_partition(M: int, b: int, rng: RngStream | None = None) -> BatchPlan:
    """Split {0..M-1} into ceil(M/b) batches of size b (last may be ragged).

    The partition is contiguous and deterministic; pass an rng to shuffle
    the indices before slicing.
    """
    if not 1 <= b <= M:
        raise ValueError(f"batch size {b} out of range [1, {M}]")
    idx = np.arange(M)
    if rng is not None:
        idx = rng.permutation(M)
    batches = tuple(
        tuple(int(i) for i in idx[start : start + b]) for start in range(0, M, b)
    )
    return BatchPlan(batch_size=b, batches=batches)


class MmvObjective:
    """Least-squares misfit of jointly measured signals, one component per row."""

    def __init__(self, A, Y):
        self.A = as_matrix(A, "A")
        self.Y = as_matrix(Y, "Y")
        if self.A.shape[0] != self.Y.shape[0]:
            raise ValueError(
                f"A has {self.A.shape[0]} rows but Y has {self.Y.shape[0]}"
            )

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def L(self) -> int:
        return self.Y.shape[1]

    @property
    def component_count(self) -> int:
        # one component per sensing row
        return self.A.shape[0]

    def _check_iterate(self, X) -> np.ndarray:
        X = as_matrix(X, "X")
        if X.shape != (self.n, self.L):
            raise ValueError(f"X must be {self.n}x{self.L}, got {X.shape}")
        return X

    def _rows(self, rows) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(rows, dtype=np.intp))
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("component index set must be nonempty")
        if (idx < 0).any() or (idx >= self.component_count).any():
            raise ValueError("component index out of range")
        return idx

    def value(self, X) -> float:
        """F(X) = (1/2m) ||Y - A X||_F^2."""
        X = self._check_iterate(X)
        R = self.Y - self.A @ X
        return 0.5 / self.m * float(np.vdot(R, R))

    def batch_grad(self, rows, X) -> np.ndarray:
        """Mean component gradient over the given rows.

        Returns (1/|rows|) * A[rows]^T (A[rows] X - Y[rows]), an n x L
        matrix.  A singleton gives the single-component gradient.
        """
        idx = self._rows(rows)
        X = self._check_iterate(X)
        A_rows = self.A[idx]
        R = A_rows @ X - self.Y[idx]
        return A_rows.T @ R / idx.size

    def column_grad(self, rows, j: int, x) -> np.ndarray:
        """Gradient of the column-j component restricted objective.

        This is the gradient of the scalar functions the per-column
        solvers minimize; it equals column j of batch_grad when
        x = X[:, j].
        """
        idx = self._rows(rows)
        if not 0 <= j < self.L:
            raise ValueError(f"column {j} out of range [0, {self.L})")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"x must have shape ({self.n},), got {x.shape}")
        A_rows = self.A[idx]
        r = A_rows @ x[:, None] - self.Y[idx, j][:, None]
        return (A_rows.T @ r / idx.size).ravel()

    def restricted_argmin(self, support: RowSupport) -> np.ndarray:
        """Minimize F over matrices supported on the given rows.

        Rows outside the support are zero; the supported block is the
        minimum-norm least-squares solution against the selected columns
        of A.
        """
        if support.ambient != self.n:
            raise ValueError(
                f"support ambient {support.ambient} != signal length {self.n}"
            )
        if len(support) == 0:
            raise ValueError("support must be nonempty")
        idx = support.as_array()
        B = np.zeros((self.n, self.L))
        B[idx] = least_squares_solve(self.A[:, idx], self.Y)
        return B

    def restricted_column_argmin(self, support: RowSupport, j: int) -> np.ndarray:
        """Per-column version of restricted_argmin, returns a length-n vector."""
        if support.ambient != self.n:
            raise ValueError(
                f"support ambient {support.ambient} != signal length {self.n}"
            )
        if len(support) == 0:
            raise ValueError("support must be nonempty")
        if not 0 <= j < self.L:
            raise ValueError(f"column {j} out of range [0, {self.L})")
        idx = support.as_array()
        b = np.zeros(self.n)
        b[idx] = least_squares_solve(self.A[:, idx], self.Y[:, j : j + 1]).ravel()
        return b

    def full_grad(self, X) -> np.ndarray:
        """Exact gradient (1/m) A^T (A X - Y) of F."""
        X = self._check_iterate(X)
        return self.A.T @ (self.A @ X - self.Y) / self.m

    def restricted_value(self, X, support: RowSupport) -> float:
        """F(X) for an X known to be supported on the given rows (cheaper)."""
        X = self._check_iterate(X)
        if len(support) == 0:
            R = self.Y
        else:
            idx = support.as_array()
            R = self.Y - self.A[:, idx] @ X[idx]
        return 0.5 / self.m * float(np.vdot(R, R))
