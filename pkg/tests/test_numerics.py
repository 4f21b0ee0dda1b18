import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tabclust.errors import DimensionMismatch, NotPositiveDefinite, NotSquare, NotSymmetric
from tabclust.numerics import (
    LowerTriangular,
    cholesky,
    make_rng,
    row_softmax,
    solve_lower_triangular,
)

SQRT2 = np.sqrt(2.0)


def test_cholesky_diagonal():
    L = cholesky(np.diag([4.0, 9.0]))
    np.testing.assert_array_equal(L.entries, np.diag([2.0, 3.0]))


def test_cholesky_scaled_identity():
    L = cholesky(0.01 * np.eye(3))
    np.testing.assert_allclose(L.entries, 0.1 * np.eye(3), rtol=0, atol=1e-15)


def test_cholesky_two_by_two():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = cholesky(A).entries
    # oracle: multiply back
    np.testing.assert_allclose(L @ L.T, A, atol=1e-12)
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, SQRT2]], atol=1e-15)


def test_cholesky_errors():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotSquare):
        cholesky(np.ones((2, 3)))
    with pytest.raises(NotSymmetric):
        cholesky(np.array([[2.0, 1.0], [0.0, 2.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_cholesky_reconstructs_random_spd(dim, seed):
    B = make_rng(seed).standard_normal((dim, dim))
    A = B.T @ B + np.eye(dim)
    L = cholesky(A).entries
    assert np.max(np.abs(L @ L.T - A)) < 1e-10
    assert np.all(np.triu(L, 1) == 0.0)
    assert np.all(np.diag(L) > 0)


def test_lower_triangular_rejects_upper_entries():
    with pytest.raises(ValueError):
        LowerTriangular(np.array([[1.0, 1.0], [0.0, 1.0]]))


@pytest.mark.parametrize("L, b, x", [
    (np.eye(2), [3.0, 7.0], [3.0, 7.0]),
    (np.diag([2.0, 4.0]), [2.0, 8.0], [1.0, 2.0]),
    (np.array([[2.0, 0.0], [1.0, SQRT2]]), [2.0, 1.0 + SQRT2], [1.0, 1.0]),
])
def test_solve_examples(L, b, x):
    got = solve_lower_triangular(LowerTriangular(L), np.array(b))
    np.testing.assert_allclose(got, x, atol=1e-14)
    np.testing.assert_allclose(L @ got, b, atol=1e-14)


def test_solve_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        solve_lower_triangular(LowerTriangular(np.eye(3)), np.ones(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_solve_inverts_multiplication(dim, seed):
    rng = make_rng(seed)
    B = rng.standard_normal((dim, dim))
    L = cholesky(B @ B.T + dim * np.eye(dim))
    x = rng.standard_normal(dim)
    back = solve_lower_triangular(L, L.entries @ x)
    assert np.linalg.norm(back - x) <= 1e-9 * max(1.0, np.linalg.norm(x))
    up = solve_lower_triangular(L, L.entries.T @ x, transpose=True)
    assert np.linalg.norm(up - x) <= 1e-9 * max(1.0, np.linalg.norm(x))


def test_softmax_examples():
    np.testing.assert_allclose(row_softmax([[0.5, 0.5]]), [[0.5, 0.5]])
    e = np.e
    np.testing.assert_allclose(row_softmax([[1.0, 0.0]]), [[e / (e + 1), 1 / (e + 1)]], rtol=1e-15)
    np.testing.assert_allclose(row_softmax([[1.0, 0.0]]), [[0.7311, 0.2689]], atol=5e-5)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-500, 500))
def test_softmax_shift_invariance(a, b, c):
    np.testing.assert_allclose(row_softmax([[a + c, b + c]]), row_softmax([[a, b]]), atol=1e-12)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 8)),
              elements=st.floats(-1e3, 1e3)))
def test_softmax_rows_sum_to_one(M):
    S = row_softmax(M)
    assert np.all(np.abs(S.sum(axis=1) - 1.0) <= 1e-9)
    assert np.all(np.isfinite(S))


def test_rng_reproducible():
    a = make_rng(123).random(1000)
    b = make_rng(123).random(1000)
    assert a.tobytes() == b.tobytes()
    assert make_rng(123, stream=1).random() != make_rng(123, stream=2).random()
