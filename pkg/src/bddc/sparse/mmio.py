"""Matrix Market coordinate files (real, general or symmetric)."""
from pathlib import Path

import numpy as np

from .matrix import CompressedSparseMatrix

HEADER = "%%MatrixMarket matrix coordinate real general"


def read_matrix_market(path) -> CompressedSparseMatrix:
    """Read a coordinate file; symmetric files are expanded to both triangles."""
    path = Path(path)
    with path.open() as fh:
        banner = fh.readline().split()
        if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
            raise ValueError(f"{path}: missing MatrixMarket banner")
        obj, fmt, field, symm = (t.lower() for t in banner[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise ValueError(f"{path}: only coordinate matrices are supported")
        if field not in ("real", "integer", "double"):
            raise ValueError(f"{path}: unsupported field '{field}'")
        if symm not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry '{symm}'")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: missing size line")
        nrows, ncols, nnz = (int(t) for t in line.split())
        body = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    if body.shape[0] != nnz or (nnz and body.shape[1] != 3):
        raise ValueError(f"{path}: expected {nnz} entries, found {body.shape[0]}")
    rows = body[:, 0].astype(np.int64) - 1
    cols = body[:, 1].astype(np.int64) - 1
    vals = body[:, 2]
    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return CompressedSparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(path, A: CompressedSparseMatrix):
    """Write ``A`` as a general coordinate file, entries in row-major order.

    Values carry 17 significant digits so they round-trip exactly.
    """
    path = Path(path)
    rows = A.row_indices() + 1
    cols = A.col_indices + 1
    with path.open("w") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        for r, c, v in zip(rows.tolist(), cols.tolist(), A.values.tolist()):
            fh.write(f"{r} {c} {v:.17g}\n")
