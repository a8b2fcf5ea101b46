import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolasso.numerics import (IndexOutOfRange, NotPositiveDefinite, as_index_set, complement,
                              min_norm_lstsq, solve_spd, submatrix)


def gauss_solve(A, b):
    """Textbook Gaussian elimination with partial pivoting, written out by hand."""
    M = np.column_stack([np.array(A, float), np.array(b, float)])
    n = len(b)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(M[k:, k])))
        M[[k, piv]] = M[[piv, k]]
        for i in range(k + 1, n):
            M[i] -= M[i, k] / M[k, k] * M[k]
    x = np.zeros(n)
    for i in reversed(range(n)):
        x[i] = (M[i, n] - M[i, i + 1:n] @ x[i + 1:]) / M[i, i]
    return x


def rref_min_norm(A, b, tol=1e-9):
    """Min-norm least squares from a row-reduced basis of the column space.

    Column pivoting picks independent columns B; the least-squares fit is
    unique in those coordinates; the min-norm solution is the projection of
    any minimizer onto the row space of A.
    """
    A = np.array(A, float)
    R = A.copy()
    cols = []
    row = 0
    for j in range(A.shape[1]):
        if row == A.shape[0]:
            break
        piv = row + int(np.argmax(np.abs(R[row:, j])))
        if abs(R[piv, j]) <= tol:
            continue
        R[[row, piv]] = R[[piv, row]]
        R[row] /= R[row, j]
        for i in range(A.shape[0]):
            if i != row:
                R[i] -= R[i, j] * R[row]
        cols.append(j)
        row += 1
    B = A[:, cols]
    xb = gauss_solve(B.T @ B, B.T @ b)
    x0 = np.zeros(A.shape[1])
    x0[cols] = xb
    # project onto row space span(A^T): basis from independent rows of A^T A
    G = A.T @ A
    V = G[:, cols]
    coef = gauss_solve(V.T @ V, V.T @ x0)
    return V @ coef


def test_solve_spd_identity():
    np.testing.assert_allclose(solve_spd(np.eye(3), [1, 2, 3]), [1, 2, 3])


def test_solve_spd_diagonal():
    np.testing.assert_allclose(solve_spd([[4, 0], [0, 9]], [8, 27]), [2, 3])


def test_solve_spd_matches_elimination(rng):
    G = rng.standard_normal((6, 6))
    A = G @ G.T + 0.5 * np.eye(6)
    b = rng.standard_normal(6)
    np.testing.assert_allclose(solve_spd(A, b), gauss_solve(A, b), atol=1e-10, rtol=0)


@settings(max_examples=60, deadline=None)
@given(dim=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
def test_solve_spd_residual(dim, seed):
    r = np.random.default_rng(seed)
    G = r.standard_normal((dim, dim))
    A = G @ G.T + 1e-2 * np.eye(dim)
    b = r.standard_normal(dim) * 10
    x = solve_spd(A, b)
    assert np.max(np.abs(A @ x - b)) <= 1e-10 * (1 + np.max(np.abs(b)))


def test_solve_spd_rejects_singular():
    with pytest.raises(NotPositiveDefinite):
        solve_spd([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    with pytest.raises(NotPositiveDefinite):
        solve_spd([[1.0, 0.0], [0.0, -1.0]], [1.0, 2.0])


def test_solve_spd_shape_errors():
    with pytest.raises(ValueError):
        solve_spd(np.eye(2), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        solve_spd([[1.0, 0.5], [0.0, 1.0]], [1.0, 2.0])


def test_min_norm_examples():
    np.testing.assert_allclose(min_norm_lstsq(np.eye(2), [5, -1]), [5, -1])
    np.testing.assert_allclose(min_norm_lstsq([[1.0], [1.0]], [2, 4]), [3])


def test_min_norm_duplicated_column(rng):
    A = rng.standard_normal((10, 4))
    A = np.column_stack([A, A[:, 1]])
    b = rng.standard_normal(10)
    np.testing.assert_allclose(min_norm_lstsq(A, b), rref_min_norm(A, b), atol=1e-8)
    # the duplicated pair shares its weight equally
    x = min_norm_lstsq(A, b)
    assert x[1] == pytest.approx(x[4], abs=1e-10)


def test_min_norm_full_rank_is_normal_equations(rng):
    A = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    np.testing.assert_allclose(min_norm_lstsq(A, b), gauss_solve(A.T @ A, A.T @ b), atol=1e-10)


def test_min_norm_optimality_and_minimal_norm(rng):
    # rank 3 matrix, 8x6, with an exact solution family
    A = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
    b = rng.standard_normal(8)
    x = min_norm_lstsq(A, b)
    res = np.linalg.norm(A @ x - b)
    for _ in range(100):
        d = rng.standard_normal(6) * 1e-3
        assert res <= np.linalg.norm(A @ (x + d) - b) + 1e-12
    # adding a null-space direction keeps the residual and grows the norm
    _, _, Vt = np.linalg.svd(A)
    null = Vt[3:]
    for v in null:
        z = x + 0.7 * v
        assert np.linalg.norm(A @ z - b) == pytest.approx(res, abs=1e-10)
        assert np.linalg.norm(z) > np.linalg.norm(x)


def test_min_norm_zero_matrix():
    np.testing.assert_array_equal(min_norm_lstsq(np.zeros((3, 2)), [1, 2, 3]), [0, 0])


def test_submatrix_examples(rng):
    np.testing.assert_array_equal(submatrix(np.eye(3), [0, 2], [0, 2]), np.eye(2))
    A = np.arange(1, 10, dtype=float).reshape(3, 3)
    np.testing.assert_array_equal(submatrix(A, [1], [0, 2]), [[4, 6]])
    B = rng.standard_normal((4, 5))
    np.testing.assert_array_equal(submatrix(B, range(4), range(5)), B)


def test_submatrix_out_of_range():
    with pytest.raises(IndexOutOfRange):
        submatrix(np.eye(3), [0, 3], [0])
    with pytest.raises(IndexOutOfRange):
        submatrix(np.eye(3), [0], [-1])


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_submatrix_composes(data):
    A = np.arange(30, dtype=float).reshape(5, 6)
    R = sorted(data.draw(st.sets(st.integers(0, 4), min_size=1)))
    C = sorted(data.draw(st.sets(st.integers(0, 5), min_size=1)))
    R2 = sorted(data.draw(st.sets(st.integers(0, len(R) - 1), min_size=1)))
    C2 = sorted(data.draw(st.sets(st.integers(0, len(C) - 1), min_size=1)))
    lhs = submatrix(submatrix(A, R, C), R2, C2)
    rhs = submatrix(A, [R[i] for i in R2], [C[j] for j in C2])
    np.testing.assert_array_equal(lhs, rhs)


def test_index_sets():
    assert as_index_set([3, 1, 2]) == (1, 2, 3)
    assert complement([0, 2], 4) == (1, 3)
    assert as_index_set([1, 1]) == (1,)
    with pytest.raises(IndexOutOfRange):
        as_index_set([5], p=3)
