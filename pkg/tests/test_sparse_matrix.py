import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bddc.errors import DimensionError
from bddc.sparse import CompressedSparseMatrix as CSR
from bddc.sparse import Permutation, dense_triple_product, spmv, transpose


def tridiag(n):
    return CSR.from_dense(2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))


def random_sparse(rng, m, n, density=0.3):
    d = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    return CSR.from_dense(d), d


@pytest.mark.parametrize("A, x, expected", [
    (CSR.identity(3), [1, 2, 3], [1, 2, 3]),
    (tridiag(3), [1, 1, 1], [1, 0, 1]),
    (CSR.zeros(2, 2), [5, 7], [0, 0]),
])
def test_spmv_examples(A, x, expected):
    np.testing.assert_array_equal(spmv(A, x), expected)


def test_spmv_dimension_mismatch():
    with pytest.raises(DimensionError):
        spmv(CSR.identity(3), np.ones(4))


def test_spmv_rejects_nonfinite():
    with pytest.raises(ValueError):
        spmv(CSR.identity(2), [1.0, np.nan])


def test_transpose_examples():
    I4 = transpose(CSR.identity(4))
    np.testing.assert_array_equal(I4.to_dense(), np.eye(4))
    row = CSR.from_dense([[3.0, 4.0]])
    col = transpose(row)
    assert col.shape == (2, 1)
    np.testing.assert_array_equal(col.to_dense(), [[3.0], [4.0]])


def test_transpose_involution(rng):
    A, d = random_sparse(rng, 7, 11)
    At = transpose(A).check()
    np.testing.assert_array_equal(At.to_dense(), d.T)
    Att = transpose(At)
    np.testing.assert_array_equal(Att.row_offsets, A.row_offsets)
    np.testing.assert_array_equal(Att.col_indices, A.col_indices)
    np.testing.assert_array_equal(Att.values, A.values)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 5), elements=st.floats(-10, 10)),
       arrays(np.float64, 5, elements=st.floats(-10, 10)),
       arrays(np.float64, 5, elements=st.floats(-10, 10)),
       st.floats(-3, 3), st.floats(-3, 3))
def test_spmv_linear(d, x, y, a, b):
    A = CSR.from_dense(d)
    lhs = spmv(A, a * x + b * y)
    rhs = a * spmv(A, x) + b * spmv(A, y)
    scale = 1 + np.abs(d).sum(1).max() * (abs(a) * np.abs(x).max() + abs(b) * np.abs(y).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


def test_from_coo_sums_duplicates_and_sorts():
    A = CSR.from_coo(2, 3, [1, 0, 1, 1], [2, 1, 0, 2], [1.0, 2.0, 3.0, 4.0]).check()
    np.testing.assert_array_equal(A.to_dense(), [[0, 2, 0], [3, 0, 5]])
    assert A.nnz == 3


def test_check_rejects_unsorted_columns():
    bad = CSR(1, 3, [0, 2], [2, 0], [1.0, 1.0])
    with pytest.raises(ValueError):
        bad.check()


def test_arrays_are_read_only():
    A = CSR.identity(2)
    with pytest.raises(ValueError):
        A.values[0] = 5.0


def test_submatrix_and_norm(rng):
    A, d = random_sparse(rng, 8, 8, 0.5)
    rows, cols = [5, 1, 2], [7, 0, 3, 1]
    np.testing.assert_array_equal(A.submatrix(rows, cols).to_dense(), d[np.ix_(rows, cols)])
    assert A.norm_inf() == pytest.approx(np.abs(d).sum(1).max(), rel=1e-15)


def test_permutation():
    p = Permutation.from_forward([2, 0, 1])
    assert p.is_valid()
    np.testing.assert_array_equal(p.inverse, [1, 2, 0])
    with pytest.raises(ValueError):
        Permutation.from_forward([0, 0, 1])


def test_triple_product_identity_columns():
    A = tridiag(4)
    E = np.eye(4)
    np.testing.assert_array_equal(dense_triple_product(E, A, E), A.to_dense())


def test_triple_product_row_sums():
    ones = np.ones((3, 1))
    assert dense_triple_product(ones, tridiag(3), ones)[0, 0] == 2.0


def test_triple_product_matches_dense(rng):
    A, d = random_sparse(rng, 9, 7, 0.4)
    P = rng.standard_normal((9, 3))
    Q = rng.standard_normal((7, 4))
    ref = P.T @ d @ Q
    np.testing.assert_allclose(dense_triple_product(P, A, Q), ref, rtol=0, atol=1e-13 * np.abs(ref).max())


def test_triple_product_symmetric():
    A = tridiag(6)
    P = np.random.default_rng(3).standard_normal((6, 3))
    G = dense_triple_product(P, A, P)
    assert np.abs(G - G.T).max() <= 1e-12 * np.abs(G).max()


def test_triple_product_mismatch():
    with pytest.raises(DimensionError):
        dense_triple_product(np.ones((3, 1)), tridiag(4), np.ones((4, 1)))
