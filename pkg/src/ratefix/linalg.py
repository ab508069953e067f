"""Gaussian elimination with partial pivoting for small dense systems."""

from __future__ import annotations

import numpy as np

PIVOT_RTOL = 1e-12


def _threshold(A: np.ndarray, scale: float | None) -> float:
    scale = float(np.abs(A).max()) if scale is None else scale
    return PIVOT_RTOL * scale


def row_echelon(A, scale: float | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduce a copy of ``A`` to row echelon form.

    Pivots with ``|p| < 1e-12 * scale`` (default ``scale = max|A|``) count as
    zero. Returns the reduced matrix and the list of pivot columns.
    """
    U = np.array(A, dtype=np.float64)
    rows, cols = U.shape
    tol = _threshold(U, scale)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(U[r:, c])))
        if abs(U[p, c]) < tol or U[p, c] == 0:
            U[r:, c] = 0.0
            continue
        if p != r:
            U[[r, p]] = U[[p, r]]
        for i in range(r + 1, rows):
            if U[i, c] != 0.0:
                lam = U[i, c] / U[r, c]
                U[i, c:] -= lam * U[r, c:]
                U[i, c] = 0.0
        pivots.append(c)
        r += 1
    return U, pivots


def rank(A, scale: float | None = None) -> int:
    return len(row_echelon(A, scale)[1])


def solve(A, rhs) -> np.ndarray | None:
    """Solve ``A x = rhs``; returns None when ``A`` is singular at the threshold."""
    A = np.asarray(A, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n) or rhs.shape != (n,):
        raise ValueError(f"shape mismatch: A {A.shape}, rhs {rhs.shape}")
    aug = np.column_stack([A, rhs])
    U, pivots = row_echelon(aug, scale=float(np.abs(A).max()))
    if pivots[:n] != list(range(n)):
        return None
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (U[k, n] - U[k, k + 1:n] @ x[k + 1:]) / U[k, k]
    return x
