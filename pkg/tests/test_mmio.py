import numpy as np
import pytest

from bddc.sparse import CompressedSparseMatrix as CSR
from bddc.sparse import read_matrix_market, write_matrix_market


def test_round_trip_exact(tmp_path, rng):
    d = rng.standard_normal((5, 4)) * (rng.random((5, 4)) < 0.5)
    d[0, 0] = 1.0 / 3.0
    A = CSR.from_dense(d)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    B = read_matrix_market(path)
    assert B.shape == A.shape and B.nnz == A.nnz
    np.testing.assert_array_equal(B.values, A.values)
    np.testing.assert_array_equal(B.col_indices, A.col_indices)


def test_writer_dialect(tmp_path):
    A = CSR.from_coo(2, 2, [1, 0], [0, 1], [2.5, -1.0])
    path = tmp_path / "b.mtx"
    write_matrix_market(path, A)
    lines = path.read_text().splitlines()
    assert lines[0] == "%%MatrixMarket matrix coordinate real general"
    assert lines[1] == "2 2 2"
    assert lines[2:] == ["1 2 -1", "2 1 2.5"]


def test_symmetric_expanded(tmp_path):
    path = tmp_path / "s.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n% comment\n"
                    "3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 2 -1\n")
    A = read_matrix_market(path)
    np.testing.assert_array_equal(A.to_dense(), [[2, -1, 0], [-1, 2, -1], [0, -1, 0]])


def test_rejects_array_format(tmp_path):
    path = tmp_path / "x.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n1 1\n1\n")
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_entry_count_checked(tmp_path):
    path = tmp_path / "x.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n")
    with pytest.raises(ValueError):
        read_matrix_market(path)
