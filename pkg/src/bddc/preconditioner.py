"""BDDC preconditioner: coarse basis, coarse problem and the three corrections."""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decomposition import ConstraintSet, Decomposition, build_constraints
from .errors import ConvergenceError, DimensionError, FactorizationError
from .krylov import SolverOptions, pcg
from .sparse import (DEFAULT_PIVOT_THRESHOLD, CompressedSparseMatrix, SparseFactorization,
                     as_vector, block_saddle, dense_triple_product, lu_factor, lu_solve,
                     solve_residual, spmm_dense, spmv, transpose)

COARSE_TOLERANCE = 1e-12
COARSE_MAX_ITERATIONS = 500
VARIANTS = ("literal", "symmetric")


@dataclass(frozen=True, eq=False)
class SubdomainData:
    index: int
    A: CompressedSparseMatrix
    C: CompressedSparseMatrix
    saddle: CompressedSparseMatrix
    saddle_factorization: SparseFactorization
    interior: np.ndarray
    interior_matrix: CompressedSparseMatrix
    interior_factorization: SparseFactorization
    Phi: np.ndarray
    Lambda: np.ndarray
    A_c: np.ndarray

    @property
    def n_local(self):
        return self.A.nrows

    @property
    def n_primal(self):
        return self.C.nrows

    def saddle_point_residuals(self):
        """``(max|C Phi - I|, max|A Phi + C^T Lambda| / |A|_inf)``."""
        cons = np.abs(spmm_dense(self.C, self.Phi) - np.eye(self.n_primal)).max()
        energy = spmm_dense(self.A, self.Phi) + spmm_dense(transpose(self.C), self.Lambda)
        scale = self.A.norm_inf()
        return float(cons), float(np.abs(energy).max() / scale) if scale else float(np.abs(energy).max())

    def basis_solve_residual(self):
        """Worst scaled residual of the saddle solves that produced the coarse basis."""
        n, p = self.n_local, self.n_primal
        sol = np.vstack([self.Phi, self.Lambda])
        worst = 0.0
        for j in range(p):
            rhs = np.zeros(n + p)
            rhs[n + j] = 1.0
            worst = max(worst, solve_residual(self.saddle, sol[:, j], rhs))
        return worst


def setup_subdomain(A_i: CompressedSparseMatrix, C_i: CompressedSparseMatrix, interior,
                    index=0, pivot_threshold=DEFAULT_PIVOT_THRESHOLD) -> SubdomainData:
    """Factor the saddle and interior systems and compute the coarse basis."""
    n = A_i.nrows
    p = C_i.nrows
    interior = np.asarray(interior, dtype=np.int64)
    K = block_saddle(A_i, C_i)
    try:
        F = lu_factor(K, pivot_threshold=pivot_threshold)
    except FactorizationError as exc:
        raise FactorizationError(f"subdomain {index}: saddle-point matrix is singular ({exc})",
                                 step=exc.step) from exc
    rhs = np.zeros((n + p, p))
    rhs[n:, :] = np.eye(p)
    sol = lu_solve(F, rhs)
    Phi = np.ascontiguousarray(sol[:n])
    Lam = np.ascontiguousarray(sol[n:])
    A_c = dense_triple_product(Phi, A_i, Phi)
    A_II = A_i.submatrix(interior, interior)
    try:
        FI = lu_factor(A_II, pivot_threshold=pivot_threshold)
    except FactorizationError as exc:
        raise FactorizationError(f"subdomain {index}: interior block is singular ({exc})",
                                 step=exc.step) from exc
    return SubdomainData(index, A_i, C_i, K, F, interior, A_II, FI, Phi, Lam, A_c)


@dataclass(frozen=True, eq=False)
class CoarseProblem:
    A_c: CompressedSparseMatrix
    primal_maps: list
    options: SolverOptions

    @property
    def n_coarse(self):
        return self.A_c.nrows

    def solve(self, r_c):
        """Plain CG on the coarse matrix."""
        if not np.any(r_c):
            return np.zeros_like(r_c)
        x, rep = pcg(self.A_c, r_c, None, self.options)
        if not rep.converged:
            raise ConvergenceError(
                f"coarse CG stopped after {rep.iterations} iterations at relative "
                f"residual {rep.final_relative_residual:.3e}",
                iterations=rep.iterations, residual=rep.final_relative_residual)
        return x


def assemble_coarse(subdomains, primal_maps, n_coarse, tolerance=COARSE_TOLERANCE,
                    max_iterations=COARSE_MAX_ITERATIONS) -> CoarseProblem:
    """Scatter-add dense ``A_ci`` blocks through the primal maps."""
    rows, cols, vals = [], [], []
    for sd, pm in zip(subdomains, primal_maps):
        pm = np.asarray(pm, dtype=np.int64)
        if pm.size and (pm.min() < 0 or pm.max() >= n_coarse):
            raise IndexError(f"subdomain {sd.index}: primal index out of range")
        if sd.A_c.shape != (pm.size, pm.size):
            raise DimensionError(f"subdomain {sd.index}: coarse block does not match its map")
        rows.append(np.repeat(pm, pm.size))
        cols.append(np.tile(pm, pm.size))
        vals.append(sd.A_c.ravel())
    A_c = CompressedSparseMatrix.from_coo(
        n_coarse, n_coarse,
        np.concatenate(rows) if rows else [], np.concatenate(cols) if cols else [],
        np.concatenate(vals) if vals else [])
    opts = SolverOptions(rel_tolerance=tolerance, max_iterations=max_iterations,
                         record_history=False)
    return CoarseProblem(A_c, [np.asarray(pm, dtype=np.int64) for pm in primal_maps], opts)


class BddcPreconditioner:
    """``M^{-1} r = v1 + v2 + v3``.

    ``variant="literal"`` applies coarse and local corrections to ``r`` and
    then the interior correction to ``r - A (v1 + v2)``. That operator is
    not symmetric. ``variant="symmetric"`` wraps the coarse plus local part
    between interior corrections on both sides,
    ``K + (I - K A) T (I - A K)``, which is.

    Per-subdomain work runs on ``workers`` threads; contributions are always
    summed in ascending subdomain order so results do not depend on the
    worker count. With ``monitor=True`` every local solve made during
    :meth:`apply` is checked and the worst scaled residual kept in
    :attr:`max_solve_residual`.
    """

    def __init__(self, global_matrix, decomposition: Decomposition, subdomains, coarse,
                 constraints: ConstraintSet | None = None, workers=1, variant="literal",
                 monitor=False):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.global_matrix = global_matrix
        self.decomposition = decomposition
        self.subdomains = list(subdomains)
        self.coarse = coarse
        self.constraints = constraints
        self.workers = int(workers)
        self.variant = variant
        self.monitor = monitor
        self.max_solve_residual = 0.0
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    @property
    def n(self):
        return self.decomposition.n_global

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _map(self, fn):
        idx = range(len(self.subdomains))
        if self._pool is None:
            return [fn(i) for i in idx]
        return list(self._pool.map(fn, idx))

    def _check(self, M, F, rhs):
        x = lu_solve(F, rhs)
        if self.monitor:
            res = solve_residual(M, x, rhs)
            with self._lock:
                self.max_solve_residual = max(self.max_solve_residual, res)
        return x

    def _gather(self, parts, subsets):
        out = np.zeros(self.n)
        for part, dofs in zip(parts, subsets):
            out[dofs] += part
        return out

    # -- corrections --------------------------------------------------------

    def coarse_residual(self, r):
        dec = self.decomposition
        parts = self._map(lambda i: self.subdomains[i].Phi.T @ (dec.weights[i] * r[dec.subdomain_dofs[i]]))
        r_c = np.zeros(self.coarse.n_coarse)
        for part, pm in zip(parts, self.coarse.primal_maps):
            r_c[pm] += part
        return r_c

    def apply_coarse_correction(self, r):
        r = as_vector(r, self.n, "r")
        x_c = self.coarse.solve(self.coarse_residual(r))
        dec = self.decomposition
        pms = self.coarse.primal_maps
        parts = self._map(lambda i: dec.weights[i] * (self.subdomains[i].Phi @ x_c[pms[i]]))
        return self._gather(parts, dec.subdomain_dofs)

    def apply_local_correction(self, r):
        r = as_vector(r, self.n, "r")
        dec = self.decomposition

        def local(i):
            sd = self.subdomains[i]
            w = dec.weights[i]
            rhs = np.zeros(sd.n_local + sd.n_primal)
            rhs[: sd.n_local] = w * r[dec.subdomain_dofs[i]]
            z = self._check(sd.saddle, sd.saddle_factorization, rhs)[: sd.n_local]
            return w * z

        return self._gather(self._map(local), dec.subdomain_dofs)

    def interior_correction(self, r1):
        """``sum_i R_i^T R_Ii^T A_IIi^{-1} R_Ii R_i r1``."""
        dec = self.decomposition

        def local(i):
            sd = self.subdomains[i]
            dofs = dec.subdomain_dofs[i][sd.interior]
            return self._check(sd.interior_matrix, sd.interior_factorization, r1[dofs])

        subsets = [dec.subdomain_dofs[i][sd.interior] for i, sd in enumerate(self.subdomains)]
        return self._gather(self._map(local), subsets)

    def apply_static_condensation(self, r, v1, v2):
        r = as_vector(r, self.n, "r")
        r1 = r - spmv(self.global_matrix, v1 + v2)
        return self.interior_correction(r1)

    def apply(self, r):
        r = as_vector(r, self.n, "r")
        if self.variant == "symmetric":
            u = self.interior_correction(r)
            s = r - spmv(self.global_matrix, u)
            t = self.apply_coarse_correction(s) + self.apply_local_correction(s)
            return u + t - self.interior_correction(spmv(self.global_matrix, t))
        v1 = self.apply_coarse_correction(r)
        v2 = self.apply_local_correction(r)
        v3 = self.apply_static_condensation(r, v1, v2)
        return v1 + v2 + v3

    __call__ = apply

    def setup_residuals(self):
        """Worst ``(constraint, energy, solve)`` residuals of the coarse bases."""
        cons = energy = solve = 0.0
        for sd in self.subdomains:
            c, e = sd.saddle_point_residuals()
            cons, energy = max(cons, c), max(energy, e)
            solve = max(solve, sd.basis_solve_residual())
        return cons, energy, solve

    def densify(self):
        """Dense ``M^{-1}``, one application per unit vector."""
        eye = np.eye(self.n)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.n)])


def setup_bddc(A, local_matrices, decomposition: Decomposition, constraints=None, workers=1,
               variant="literal", coarse_tolerance=COARSE_TOLERANCE,
               coarse_max_iterations=COARSE_MAX_ITERATIONS,
               pivot_threshold=DEFAULT_PIVOT_THRESHOLD, monitor=False) -> BddcPreconditioner:
    """Build the preconditioner for ``A = sum_i R_i^T A_i R_i``."""
    if constraints is None:
        constraints = build_constraints(decomposition)
    dec = decomposition

    def task(i):
        return setup_subdomain(local_matrices[i], constraints.C[i],
                               np.arange(dec.n_interior[i]), index=i,
                               pivot_threshold=pivot_threshold)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            subdomains = list(pool.map(task, range(dec.n_subdomains)))
    else:
        subdomains = [task(i) for i in range(dec.n_subdomains)]
    coarse = assemble_coarse(subdomains, constraints.primal_maps, constraints.n_coarse,
                             coarse_tolerance, coarse_max_iterations)
    return BddcPreconditioner(A, dec, subdomains, coarse, constraints, workers=workers,
                              variant=variant, monitor=monitor)
