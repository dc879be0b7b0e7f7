"""Compressed sparse row storage and the basic kernels on it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._jit import USE_NUMBA, njit
from ..errors import DimensionError

INDEX = np.int64


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CompressedSparseMatrix:
    """Sparse matrix in compressed-row form.

    Column indices are strictly increasing within a row and no entry is
    stored twice. Arrays are made read-only on construction.
    """

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nrows", int(self.nrows))
        object.__setattr__(self, "ncols", int(self.ncols))
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets, INDEX))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices, INDEX))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.row_offsets.shape != (self.nrows + 1,):
            raise DimensionError("row_offsets must have length nrows + 1")
        if self.col_indices.shape != self.values.shape:
            raise DimensionError("col_indices and values differ in length")

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.values.shape[0])

    def check(self):
        """Raise ``ValueError`` if the storage invariants are violated."""
        p = self.row_offsets
        if p[0] != 0 or p[-1] != self.nnz or np.any(np.diff(p) < 0):
            raise ValueError("row_offsets malformed")
        if self.nnz:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.ncols:
                raise ValueError("column index out of range")
            d = np.diff(self.col_indices)
            row_start = np.zeros(self.nnz, dtype=bool)
            row_start[p[1:-1][p[1:-1] < self.nnz]] = True
            if np.any((d <= 0) & ~row_start[1:]):
                raise ValueError("column indices not strictly increasing within a row")
        return self

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals):
        """Build from triplets, summing duplicates in input order."""
        rows = np.asarray(rows, dtype=INDEX).ravel()
        cols = np.asarray(cols, dtype=INDEX).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == vals.shape):
            raise DimensionError("triplet arrays differ in length")
        if rows.size and (rows.min() < 0 or rows.max() >= nrows
                          or cols.min() < 0 or cols.max() >= ncols):
            raise DimensionError("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.empty(rows.size, dtype=bool)
            new[0] = True
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        offsets = np.zeros(nrows + 1, dtype=INDEX)
        np.cumsum(np.bincount(rows, minlength=nrows), out=offsets[1:])
        return cls(nrows, ncols, offsets, cols, vals)

    @classmethod
    def from_dense(cls, a, drop_zeros=True):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        if drop_zeros:
            r, c = np.nonzero(a)
        else:
            r, c = np.indices(a.shape).reshape(2, -1)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=INDEX)
        return cls(n, n, np.arange(n + 1, dtype=INDEX), idx, np.ones(n))

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros(nrows + 1, dtype=INDEX),
                   np.zeros(0, dtype=INDEX), np.zeros(0))

    # -- views --------------------------------------------------------------

    def to_dense(self):
        out = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def row_indices(self):
        return np.repeat(np.arange(self.nrows, dtype=INDEX), np.diff(self.row_offsets))

    def diagonal(self):
        rows = self.row_indices()
        on = rows == self.col_indices
        d = np.zeros(min(self.shape))
        d[rows[on]] = self.values[on]
        return d

    def submatrix(self, row_idx, col_idx):
        """Extract ``A[row_idx][:, col_idx]`` keeping the given orderings."""
        row_idx = np.asarray(row_idx, dtype=INDEX)
        col_idx = np.asarray(col_idx, dtype=INDEX)
        colmap = np.full(self.ncols, -1, dtype=INDEX)
        colmap[col_idx] = np.arange(col_idx.size)
        lens = np.diff(self.row_offsets)[row_idx]
        src = np.concatenate([np.arange(self.row_offsets[r], self.row_offsets[r + 1])
                              for r in row_idx]) if row_idx.size else np.zeros(0, INDEX)
        new_rows = np.repeat(np.arange(row_idx.size), lens)
        new_cols = colmap[self.col_indices[src]]
        keep = new_cols >= 0
        return CompressedSparseMatrix.from_coo(
            row_idx.size, col_idx.size, new_rows[keep], new_cols[keep], self.values[src][keep])

    def norm_inf(self):
        if self.nnz == 0:
            return 0.0
        return float(np.max(np.bincount(self.row_indices(), weights=np.abs(self.values),
                                        minlength=self.nrows)))

    def __matmul__(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            return spmv(self, x)
        return spmm_dense(self, x)

    def __repr__(self):
        return f"CompressedSparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection on ``range(n)``; ``forward[k]`` is the k-th index in the new order."""

    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "forward", _frozen(self.forward, INDEX))
        object.__setattr__(self, "inverse", _frozen(self.inverse, INDEX))

    @classmethod
    def from_forward(cls, forward):
        forward = np.asarray(forward, dtype=INDEX)
        n = forward.size
        if n and (forward.min() < 0 or forward.max() >= n):
            raise ValueError("permutation entries out of range")
        inverse = np.full(n, -1, dtype=INDEX)
        inverse[forward] = np.arange(n, dtype=INDEX)
        if np.any(inverse < 0):
            raise ValueError("not a permutation: repeated entries")
        return cls(forward, inverse)

    @classmethod
    def identity(cls, n):
        return cls.from_forward(np.arange(n))

    def __len__(self):
        return int(self.forward.size)

    def is_valid(self):
        n = self.forward.size
        return (self.inverse.size == n
                and np.array_equal(self.inverse[self.forward], np.arange(n))
                and np.array_equal(self.forward[self.inverse], np.arange(n)))


def as_vector(x, n=None, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise DimensionError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


# -- kernels -----------------------------------------------------------------

@njit
def _spmv_loop(indptr, indices, data, x, out):
    for i in range(indptr.shape[0] - 1):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        out[i] = s


def _spmv_numpy(indptr, indices, data, x, out):
    rows = np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))
    out[:] = np.bincount(rows, weights=data * x[indices], minlength=out.shape[0])


_spmv_kernel = _spmv_loop if USE_NUMBA else _spmv_numpy


@njit
def _spmm_loop(indptr, indices, data, X, out):
    k = X.shape[1]
    for i in range(indptr.shape[0] - 1):
        for p in range(indptr[i], indptr[i + 1]):
            a = data[p]
            j = indices[p]
            for c in range(k):
                out[i, c] += a * X[j, c]


@njit
def _transpose_loop(nrows, ncols, indptr, indices, data, tptr, tind, tdat):
    for p in range(indices.shape[0]):
        tptr[indices[p] + 1] += 1
    for j in range(ncols):
        tptr[j + 1] += tptr[j]
    nxt = tptr[:-1].copy()
    for i in range(nrows):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            q = nxt[j]
            tind[q] = i
            tdat[q] = data[p]
            nxt[j] = q + 1


def _transpose_numpy(nrows, ncols, indptr, indices, data, tptr, tind, tdat):
    rows = np.repeat(np.arange(nrows, dtype=INDEX), np.diff(indptr))
    order = np.argsort(indices, kind="stable")
    tind[:] = rows[order]
    tdat[:] = data[order]
    tptr[0] = 0
    np.cumsum(np.bincount(indices, minlength=ncols), out=tptr[1:])


_transpose_kernel = _transpose_loop if USE_NUMBA else _transpose_numpy


def spmv(A: CompressedSparseMatrix, x) -> np.ndarray:
    """Return ``A @ x``."""
    x = as_vector(x, name="x")
    if x.shape[0] != A.ncols:
        raise DimensionError(f"spmv: matrix has {A.ncols} columns, vector has {x.shape[0]}")
    out = np.empty(A.nrows)
    _spmv_kernel(A.row_offsets, A.col_indices, A.values, x, out)
    return out


def spmm_dense(A: CompressedSparseMatrix, X) -> np.ndarray:
    """Return ``A @ X`` for a dense two-dimensional ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != A.ncols:
        raise DimensionError(f"spmm: matrix has {A.ncols} columns, operand shape {X.shape}")
    out = np.zeros((A.nrows, X.shape[1]))
    if USE_NUMBA:
        _spmm_loop(A.row_offsets, A.col_indices, A.values, X, out)
    else:
        for c in range(X.shape[1]):
            _spmv_numpy(A.row_offsets, A.col_indices, A.values, X[:, c], out[:, c])
    return out


def transpose(A: CompressedSparseMatrix) -> CompressedSparseMatrix:
    tptr = np.zeros(A.ncols + 1, dtype=INDEX)
    tind = np.empty(A.nnz, dtype=INDEX)
    tdat = np.empty(A.nnz)
    _transpose_kernel(A.nrows, A.ncols, A.row_offsets, A.col_indices, A.values,
                      tptr, tind, tdat)
    return CompressedSparseMatrix(A.ncols, A.nrows, tptr, tind, tdat)


def dense_triple_product(P, A: CompressedSparseMatrix, Q) -> np.ndarray:
    """Return ``P.T @ A @ Q`` with dense ``P`` and ``Q``."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.ndim != 2 or Q.ndim != 2:
        raise DimensionError("triple product operands must be two-dimensional")
    if P.shape[0] != A.nrows or Q.shape[0] != A.ncols:
        raise DimensionError(
            f"triple product: P {P.shape}, A {A.shape}, Q {Q.shape} do not conform")
    return P.T @ spmm_dense(A, Q)


def block_saddle(A: CompressedSparseMatrix, C: CompressedSparseMatrix) -> CompressedSparseMatrix:
    """Assemble ``[[A, C^T], [C, 0]]``."""
    if A.nrows != A.ncols or C.ncols != A.ncols:
        raise DimensionError("saddle blocks do not conform")
    n, m = A.nrows, C.nrows
    ar = A.row_indices()
    cr = C.row_indices()
    rows = np.concatenate([ar, C.col_indices, cr + n])
    cols = np.concatenate([A.col_indices, cr + n, C.col_indices])
    vals = np.concatenate([A.values, C.values, C.values])
    return CompressedSparseMatrix.from_coo(n + m, n + m, rows, cols, vals)
