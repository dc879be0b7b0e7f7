"""Sparse LU: equilibration, threshold partial pivoting, triangular solves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._jit import njit
from ..errors import DimensionError, EquilibrationError, FactorizationError
from .amd import amd_order
from .matrix import INDEX, CompressedSparseMatrix, Permutation, spmv, transpose

DEFAULT_PIVOT_THRESHOLD = 0.1
EQUILIBRATION_SWEEPS = 10


@njit
def _absmax(nrows, ncols, indptr, indices, vals, rs, cs, rmax, cmax):
    rmax[:] = 0.0
    cmax[:] = 0.0
    for i in range(nrows):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            t = abs(rs[i] * vals[p] * cs[j])
            if t > rmax[i]:
                rmax[i] = t
            if t > cmax[j]:
                cmax[j] = t


def equilibrate(A: CompressedSparseMatrix, sweeps=EQUILIBRATION_SWEEPS):
    """Row and column scalings bringing every row and column max-abs entry into [1/2, 1].

    Simultaneous square-root row/column sweeps, so a symmetric matrix keeps
    equal row and column scales; one common factor then pulls the largest
    maximum down to exactly one.
    """
    if A.nrows != A.ncols:
        raise DimensionError(f"equilibrate needs a square matrix, got {A.shape}")
    n = A.nrows
    rs = np.ones(n)
    cs = np.ones(n)
    rmax = np.empty(n)
    cmax = np.empty(n)
    _absmax(n, n, A.row_offsets, A.col_indices, A.values, rs, cs, rmax, cmax)
    zero_rows = np.flatnonzero(rmax == 0.0)
    if zero_rows.size:
        raise EquilibrationError(f"row {zero_rows[0]} is structurally zero", int(zero_rows[0]))
    zero_cols = np.flatnonzero(cmax == 0.0)
    if zero_cols.size:
        raise EquilibrationError(f"column {zero_cols[0]} is structurally zero", int(zero_cols[0]))
    for _ in range(sweeps):
        if max(np.abs(1.0 - rmax).max(), np.abs(1.0 - cmax).max()) < 1e-3:
            break
        rs /= np.sqrt(rmax)
        cs /= np.sqrt(cmax)
        _absmax(n, n, A.row_offsets, A.col_indices, A.values, rs, cs, rmax, cmax)
    top = np.sqrt(max(rmax.max(), cmax.max()))
    if top != 1.0:
        rs /= top
        cs /= top
    return rs, cs


@njit
def _reach(n, lp, li, pinv, bp, bi, col, xi, marked, stamp, stack, pstack):
    top = n
    for p0 in range(bp[col], bp[col + 1]):
        root = bi[p0]
        if marked[root] == stamp:
            continue
        head = 0
        stack[0] = root
        while head >= 0:
            j = stack[head]
            jnew = pinv[j]
            if marked[j] != stamp:
                marked[j] = stamp
                pstack[head] = lp[jnew] if jnew >= 0 else 0
            end = lp[jnew + 1] if jnew >= 0 else 0
            done = True
            for p in range(pstack[head], end):
                i = li[p]
                if marked[i] == stamp:
                    continue
                pstack[head] = p + 1
                head += 1
                stack[head] = i
                done = False
                break
            if done:
                head -= 1
                top -= 1
                xi[top] = j
    return top


@njit
def _lu_kernel(n, bp, bi, bx, q, tol, singular_tol):
    """Left-looking LU of the CSC matrix (bp, bi, bx) with column order q.

    Returns status (-1 ok, else failing step), L and U in CSC form with L row
    indices already in pivot order, pinv and the number of columns whose
    diagonal candidate was rejected.
    """
    cap_l = 4 * bp[n] + n
    cap_u = 4 * bp[n] + n
    lp = np.zeros(n + 1, dtype=np.int64)
    li = np.empty(cap_l, dtype=np.int64)
    lx = np.empty(cap_l)
    up = np.zeros(n + 1, dtype=np.int64)
    ui = np.empty(cap_u, dtype=np.int64)
    ux = np.empty(cap_u)
    pinv = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n)
    xi = np.empty(n, dtype=np.int64)
    marked = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    pstack = np.empty(n, dtype=np.int64)
    lnz = 0
    unz = 0
    fallbacks = 0
    for k in range(n):
        lp[k] = lnz
        up[k] = unz
        if lnz + n > cap_l:
            cap_l = 2 * cap_l + n
            t1 = np.empty(cap_l, dtype=np.int64)
            t1[:lnz] = li[:lnz]
            li = t1
            t2 = np.empty(cap_l)
            t2[:lnz] = lx[:lnz]
            lx = t2
        if unz + n > cap_u:
            cap_u = 2 * cap_u + n
            t3 = np.empty(cap_u, dtype=np.int64)
            t3[:unz] = ui[:unz]
            ui = t3
            t4 = np.empty(cap_u)
            t4[:unz] = ux[:unz]
            ux = t4
        col = q[k]
        top = _reach(n, lp, li, pinv, bp, bi, col, xi, marked, k, stack, pstack)
        for p in range(top, n):
            x[xi[p]] = 0.0
        for p in range(bp[col], bp[col + 1]):
            x[bi[p]] = bx[p]
        for px in range(top, n):
            j = xi[px]
            jj = pinv[j]
            if jj < 0:
                continue
            xj = x[j]
            for p in range(lp[jj] + 1, lp[jj + 1]):
                x[li[p]] -= lx[p] * xj
        ipiv = -1
        amax = -1.0
        for p in range(top, n):
            i = xi[p]
            if pinv[i] < 0:
                t = abs(x[i])
                if t > amax:
                    amax = t
                    ipiv = i
            else:
                ui[unz] = pinv[i]
                ux[unz] = x[i]
                unz += 1
        if ipiv == -1 or amax <= singular_tol:
            lp[k + 1] = lnz
            up[k + 1] = unz
            return k, lp, li[:lnz], lx[:lnz], up, ui[:unz], ux[:unz], pinv, fallbacks
        if pinv[col] < 0 and abs(x[col]) >= amax * tol:
            ipiv = col
        else:
            fallbacks += 1
        pivot = x[ipiv]
        ui[unz] = k
        ux[unz] = pivot
        unz += 1
        pinv[ipiv] = k
        li[lnz] = ipiv
        lx[lnz] = 1.0
        lnz += 1
        for p in range(top, n):
            i = xi[p]
            if pinv[i] < 0:
                li[lnz] = i
                lx[lnz] = x[i] / pivot
                lnz += 1
            x[i] = 0.0
        lp[k + 1] = lnz
        up[k + 1] = unz
    for p in range(lnz):
        li[p] = pinv[li[p]]
    return -1, lp, li[:lnz], lx[:lnz], up, ui[:unz], ux[:unz], pinv, fallbacks


@njit
def _lower_unit_solve(indptr, indices, data, x):
    for i in range(x.shape[0]):
        s = x[i]
        for p in range(indptr[i], indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s


@njit
def _upper_solve(indptr, indices, data, x):
    for i in range(x.shape[0] - 1, -1, -1):
        s = x[i]
        d = data[indptr[i]]
        for p in range(indptr[i] + 1, indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s / d


@njit
def _lu_solve_kernel(lptr, lind, ldat, uptr, uind, udat, pinv, q, rs, cs, b, out):
    n = b.shape[0]
    w = np.empty(n)
    for i in range(n):
        w[pinv[i]] = rs[i] * b[i]
    _lower_unit_solve(lptr, lind, ldat, w)
    _upper_solve(uptr, uind, udat, w)
    for k in range(n):
        j = q[k]
        out[j] = cs[j] * w[k]


def _csc_to_csr(n, cp, ci, cx, drop_diagonal=False):
    cols = np.repeat(np.arange(n, dtype=INDEX), np.diff(cp))
    rows = np.asarray(ci, dtype=INDEX)
    vals = np.asarray(cx)
    if drop_diagonal:
        keep = rows != cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    return CompressedSparseMatrix.from_coo(n, n, rows, cols, vals)


@dataclass(frozen=True, eq=False)
class SparseFactorization:
    """``P_r D_r A D_c P_c = L U`` with unit-lower ``L`` stored without its diagonal.

    ``row_perm.forward[k]`` is the original row chosen as pivot k;
    ``col_perm.forward[k]`` is the original column eliminated at step k.
    """

    lower: CompressedSparseMatrix
    upper: CompressedSparseMatrix
    row_perm: Permutation
    col_perm: Permutation
    row_scale: np.ndarray
    col_scale: np.ndarray
    pivot_fallbacks: int = 0

    @property
    def n(self):
        return self.upper.nrows

    @property
    def fill_nnz(self):
        return self.lower.nnz + self.upper.nnz

    def solve(self, b):
        return lu_solve(self, b)


def lu_factor(A: CompressedSparseMatrix, fill_order: Permutation | None = None,
              pivot_threshold=DEFAULT_PIVOT_THRESHOLD, scale=True) -> SparseFactorization:
    """Factor a square sparse matrix.

    ``fill_order`` defaults to the AMD order of ``A + A^T``. Column k of the
    permuted matrix prefers its diagonal row as pivot while that entry is at
    least ``pivot_threshold`` times the column maximum, and otherwise takes
    the column maximum.
    """
    if A.nrows != A.ncols:
        raise DimensionError(f"lu_factor needs a square matrix, got {A.shape}")
    if not 0.0 < pivot_threshold <= 1.0:
        raise ValueError("pivot_threshold must lie in (0, 1]")
    n = A.nrows
    if fill_order is None:
        fill_order = amd_order(A)
    if len(fill_order) != n:
        raise DimensionError("fill_order length does not match the matrix")
    if scale:
        rs, cs = equilibrate(A)
    else:
        rs, cs = np.ones(n), np.ones(n)
    rows = A.row_indices()
    scaled = CompressedSparseMatrix(
        n, n, A.row_offsets, A.col_indices, rs[rows] * A.values * cs[A.col_indices])
    csc = transpose(scaled)
    amax = float(np.abs(scaled.values).max()) if scaled.nnz else 0.0
    singular_tol = n * np.finfo(float).eps * amax
    status, lp, li, lx, up, ui, ux, pinv, fallbacks = _lu_kernel(
        n, csc.row_offsets, csc.col_indices, csc.values,
        np.ascontiguousarray(fill_order.forward), float(pivot_threshold), singular_tol)
    if status >= 0:
        raise FactorizationError(
            f"no acceptable pivot at elimination step {status} "
            f"(column {int(fill_order.forward[status])}): matrix is singular", step=int(status))
    row_perm = Permutation(np.argsort(pinv), pinv)
    return SparseFactorization(
        lower=_csc_to_csr(n, lp, li, lx, drop_diagonal=True),
        upper=_csc_to_csr(n, up, ui, ux),
        row_perm=row_perm,
        col_perm=fill_order,
        row_scale=rs,
        col_scale=cs,
        pivot_fallbacks=int(fallbacks),
    )


def lu_solve(F: SparseFactorization, b) -> np.ndarray:
    """Solve ``A x = b``; a two-dimensional ``b`` is solved column by column."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 2:
        return np.column_stack([lu_solve(F, b[:, c]) for c in range(b.shape[1])]) \
            if b.shape[1] else np.zeros((F.n, 0))
    if b.ndim != 1 or b.shape[0] != F.n:
        raise DimensionError(f"lu_solve: right-hand side shape {b.shape}, expected ({F.n},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains non-finite entries")
    out = np.empty(F.n)
    L, U = F.lower, F.upper
    _lu_solve_kernel(L.row_offsets, L.col_indices, L.values,
                     U.row_offsets, U.col_indices, U.values,
                     F.row_perm.inverse, F.col_perm.forward, F.row_scale, F.col_scale, b, out)
    return out


def solve_residual(A: CompressedSparseMatrix, x, b):
    """Scaled residual ``|A x - b|_inf / (|A|_inf |x|_inf + |b|_inf)``."""
    r = spmv(A, x) - b
    denom = A.norm_inf() * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
    return float(np.abs(r).max(initial=0.0) / denom) if denom > 0 else float(np.abs(r).max(initial=0.0))
