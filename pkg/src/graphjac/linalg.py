"""Small dense symmetric positive definite solves.

Every linear system in this package is an r x r Gram matrix with r at most
a handful, so we use a plain Cholesky factorization with an explicit pivot
ratio guard instead of pulling in a LAPACK wrapper.  The guard is the
contract: a pivot smaller than ``pivot_tol`` times the largest pivot seen
means the matrix is numerically singular and the caller's length data was
invalid.
"""

from __future__ import annotations

import numpy as np

PIVOT_RATIO_TOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix expected to be SPD fails the pivot test."""


def cholesky_spd(a: np.ndarray, pivot_tol: float = PIVOT_RATIO_TOL) -> np.ndarray:
    """Return lower-triangular L with L L^T = a, or raise NotPositiveDefiniteError."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if n == 0:
        return np.zeros((0, 0))
    if not np.allclose(a, a.T, atol=1e-12, rtol=0.0):
        raise ValueError("matrix is not symmetric")
    lower = np.zeros((n, n))
    max_pivot = 0.0
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        max_pivot = max(max_pivot, pivot)
        if pivot <= 0.0 or pivot < pivot_tol * max_pivot:
            raise NotPositiveDefiniteError(
                f"pivot {pivot:.3e} at row {j} below {pivot_tol:.1e} of max pivot {max_pivot:.3e}"
            )
        lower[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            lower[i, j] = (a[i, j] - lower[i, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for SPD a via Cholesky; b may be a vector or matrix."""
    lower = cholesky_spd(a)
    b = np.asarray(b, dtype=float)
    if lower.shape[0] == 0:
        return np.zeros_like(b)
    y = _forward_sub(lower, b)
    return _back_sub(lower.T, y)


def invert_spd(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return solve_spd(a, np.eye(a.shape[0]))


def _forward_sub(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lower.shape[0]
    y = np.array(b, dtype=float)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    return y


def _back_sub(upper: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = upper.shape[0]
    x = np.array(y, dtype=float)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - upper[i, i + 1 :] @ x[i + 1 :]) / upper[i, i]
    return x
