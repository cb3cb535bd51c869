"""Dense matrix primitives shared by the whole package.

Matrices are plain C-contiguous float64 2-D numpy arrays, treated as
immutable once constructed (safe to share across threads).  This module
provides the norms used everywhere, minimum-norm least squares, and a
seeded random-stream abstraction with explicit substream derivation so
that trials and columns can be randomized independently and reproducibly.
A stream is single-owner: share the (seed, id) recipe, not the object.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "RngStream",
    "as_matrix",
    "require_finite",
    "frobenius_norm",
    "row_norms",
    "least_squares_solve",
    "draw_index",
    "derive_seed",
]

_U64 = (1 << 64) - 1


def as_matrix(X, name: str = "matrix") -> np.ndarray:
    """Coerce input to a C-contiguous float64 2-D array."""
    A = np.ascontiguousarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    return A


def require_finite(X: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Reject NaN/Inf entries (used by generators and file I/O)."""
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite entries")
    return X


def frobenius_norm(X) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(X)))


def row_norms(X) -> np.ndarray:
    """Euclidean norm of each row, as a 1-D array of length rows."""
    return np.linalg.norm(as_matrix(X), axis=1)


def least_squares_solve(A_sub, Y) -> np.ndarray:
    """Minimum-Frobenius-norm solution B of min ||Y - A_sub @ B||_F.

    Uses pivoted complete orthogonal factorization (LAPACK gelsy), which
    already yields the minimum-norm solution for wide systems; when the
    pivoted factorization detects rank deficiency (rank below min(m, s))
    the solve is redone with the SVD driver (gelsd).  Rank deficiency is
    therefore not an error.
    """
    A_sub = as_matrix(A_sub, "A_sub")
    Y = as_matrix(Y, "Y")
    m, s = A_sub.shape
    if s < 1:
        raise ValueError("A_sub must have at least one column")
    if Y.shape[0] != m:
        raise ValueError(
            f"row mismatch: A_sub has {m} rows but Y has {Y.shape[0]}"
        )
    B, _, rank, _ = scipy.linalg.lstsq(
        A_sub, Y, lapack_driver="gelsy", check_finite=False
    )
    if rank < min(m, s):
        B, _, _, _ = scipy.linalg.lstsq(
            A_sub, Y, lapack_driver="gelsd", check_finite=False
        )
    return B


class RngStream:
    """A reproducible random stream identified by (master_seed, stream_id).

    The same pair yields the same value sequence on every platform;
    distinct ids yield statistically independent streams.  The state is a
    counter-based Philox generator keyed by hashing the id tuple into the
    seed material, so substreams can be derived without coordination.
    """

    def __init__(self, master_seed: int, stream_id=()):
        if isinstance(stream_id, (int, np.integer)):
            stream_id = (int(stream_id),)
        self.master_seed = int(master_seed) & _U64
        self.stream_id = tuple(int(i) & _U64 for i in stream_id)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.stream_id)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def substream(self, *ids: int) -> "RngStream":
        """Derive an independent child stream by extending the id tuple."""
        return RngStream(self.master_seed, self.stream_id + tuple(ids))

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self._gen.random())

    def standard_normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def choice_without_replacement(self, n: int, size: int) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=False)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def derive_seed(master_seed: int, *ids: int) -> int:
    """Hash (master_seed, ids) into a fresh 64-bit seed."""
    seq = np.random.SeedSequence(
        int(master_seed) & _U64, spawn_key=tuple(int(i) & _U64 for i in ids)
    )
    return int(seq.generate_state(1, np.uint64)[0])


def draw_index(p, rng: RngStream) -> int:
    """Sample an index with the given probabilities (inverse-CDF walk).

    p must be nonnegative and sum to 1 within 1e-12.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p must be a nonempty 1-D probability vector")
    if (p < 0).any():
        raise ValueError("p has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"p sums to {total!r}, expected 1 within 1e-12")
    cum = np.cumsum(p)
    u = rng.uniform()
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= p.size:
        # u beyond the last cumulative value (rounding); take last nonzero bin
        idx = int(np.flatnonzero(p > 0)[-1])
    return idx
