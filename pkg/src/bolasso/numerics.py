"""Small dense linear-algebra kernels shared by the solvers.

Everything here works on plain ``numpy`` arrays. Index sets are sorted
tuples of zero-based column indices.
"""

import numpy as np
from scipy import linalg

_EPS = np.finfo(float).eps


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot falls below the rank tolerance."""


class IndexOutOfRange(IndexError):
    pass


def as_index_set(indices, p=None):
    """Return ``indices`` as a strictly increasing tuple of ints.

    Duplicates are removed. If ``p`` is given every index must lie in
    ``[0, p)``.
    """
    out = tuple(sorted({int(i) for i in indices}))
    if out and out[0] < 0:
        raise IndexOutOfRange(f"negative index {out[0]}")
    if p is not None and out and out[-1] >= p:
        raise IndexOutOfRange(f"index {out[-1]} out of range for size {p}")
    return out


def complement(indices, p):
    """Indices of ``range(p)`` not in ``indices``."""
    present = set(indices)
    return tuple(j for j in range(p) if j not in present)


def solve_spd(A, b):
    """Solve ``A x = b`` for symmetric positive definite ``A`` by Cholesky.

    Raises
    ------
    NotPositiveDefinite
        If a factorization pivot is not larger than
        ``dim * eps * max(diag(A))``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {b.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(np.max(np.abs(A), initial=0.0), 1.0):
        raise ValueError("matrix is not symmetric")
    return cho_solve_checked(cholesky_checked(A), b)


def cholesky_checked(A):
    """Lower Cholesky factor of ``A`` with the pivot test of :func:`solve_spd`."""
    A = np.asarray(A, dtype=float)
    dim = A.shape[0]
    if dim == 0:
        return np.zeros((0, 0))
    threshold = dim * _EPS * max(float(np.max(np.diag(A))), 0.0)
    try:
        L = linalg.cholesky(A, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    # pivots of the LDL^T form are the squared diagonal of L
    pivots = np.diag(L) ** 2
    if threshold == 0.0 or np.any(pivots <= threshold):
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below tolerance {threshold:.3e}")
    return L


def cho_solve_checked(L, b):
    if L.shape[0] == 0:
        return np.zeros_like(np.asarray(b, dtype=float))
    return linalg.cho_solve((L, True), b, check_finite=False)


def min_norm_lstsq(A, b):
    """Minimum-norm least-squares solution of ``A x ~ b``.

    Singular values below ``max(A.shape) * eps * s_max`` are treated as
    zero, so rank-deficient designs (duplicated columns, bootstrap samples
    with few distinct rows) are handled.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {b.shape}")
    if A.shape[1] == 0:
        return np.zeros(0)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > max(A.shape) * _EPS * s[0]
    coef = (U[:, keep].T @ b) / s[keep]
    return Vt[keep].T @ coef


def submatrix(A, rows, cols):
    """Return ``A[rows][:, cols]`` after range-checking both index sets."""
    A = np.asarray(A)
    rows = np.asarray(rows, dtype=int).reshape(-1)
    cols = np.asarray(cols, dtype=int).reshape(-1)
    for name, idx, size in (("row", rows, A.shape[0]), ("column", cols, A.shape[1])):
        bad = idx[(idx < 0) | (idx >= size)]
        if bad.size:
            raise IndexOutOfRange(f"{name} index {int(bad[0])} out of range for size {size}")
    return A[np.ix_(rows, cols)]
