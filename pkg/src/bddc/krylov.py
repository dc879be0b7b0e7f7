"""Preconditioned conjugate gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotSPDError
from .sparse.matrix import CompressedSparseMatrix, as_vector, spmv


@dataclass(frozen=True)
class SolverOptions:
    rel_tolerance: float = 1e-8
    abs_tolerance: float = 1e-300
    max_iterations: int = 10_000
    record_history: bool = True

    def __post_init__(self):
        if not (self.rel_tolerance > 0 and self.abs_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class SolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    residual_history: list | None = None
    condition_estimate: float | None = None
    alphas: list = field(default_factory=list, repr=False)
    betas: list = field(default_factory=list, repr=False)


def lanczos_matrix(alphas, betas):
    """Tridiagonal Lanczos matrix implied by the CG step lengths and ratios."""
    k = len(alphas)
    T = np.zeros((k, k))
    for j in range(k):
        T[j, j] = 1.0 / alphas[j]
        if j > 0:
            T[j, j] += betas[j - 1] / alphas[j - 1]
            T[j, j - 1] = T[j - 1, j] = np.sqrt(betas[j - 1]) / alphas[j - 1]
    return T


def condition_estimate(alphas, betas):
    """Extreme-eigenvalue ratio of the Lanczos matrix; ``None`` below two steps."""
    if len(alphas) < 2:
        return None
    ev = np.linalg.eigvalsh(lanczos_matrix(alphas, betas[: len(alphas) - 1]))
    if ev[0] <= 0:
        return float("inf")
    return float(ev[-1] / ev[0])


def pcg(A, b, M=None, opts: SolverOptions | None = None, x0=None, callback=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    ``A`` is a :class:`CompressedSparseMatrix` or a callable returning
    ``A @ v``; ``M`` is a callable applying the preconditioner, or ``None``.
    Stops when ``|r|/|b| <= rel_tolerance`` or ``|r| <= abs_tolerance`` on
    the recurrence residual. On hitting ``max_iterations`` the iterate with
    the smallest residual is returned with ``converged=False``.
    ``callback(x, k)`` sees every iterate; it must not modify ``x``.
    """
    opts = opts or SolverOptions()
    matvec = (lambda v: spmv(A, v)) if isinstance(A, CompressedSparseMatrix) else A
    b = as_vector(b, name="b")
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else as_vector(x0, n, "x0").copy()
    r = b - matvec(x) if x0 is not None else b.copy()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, [0.0] if opts.record_history else None)

    rnorm = float(np.linalg.norm(r))
    history = [rnorm / bnorm] if opts.record_history else None
    if rnorm / bnorm <= opts.rel_tolerance or rnorm <= opts.abs_tolerance:
        return x, SolveReport(0, rnorm / bnorm, True, history)

    z = r.copy() if M is None else M(r)
    p = z.copy()
    rz = float(r @ z)
    alphas, betas = [], []
    best_x, best_res = x.copy(), rnorm
    converged = False
    it = 0
    while it < opts.max_iterations:
        it += 1
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if not pAp > 0.0:
            raise NotSPDError(f"matrix not SPD: p^T A p = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        alphas.append(alpha)
        if callback is not None:
            callback(x, it)
        rnorm = float(np.linalg.norm(r))
        if history is not None:
            history.append(rnorm / bnorm)
        if rnorm / bnorm <= opts.rel_tolerance or rnorm <= opts.abs_tolerance:
            converged = True
            best_x, best_res = x, rnorm
            break
        if rnorm < best_res:
            best_x, best_res = x.copy(), rnorm
        z = r.copy() if M is None else M(r)
        rz_new = float(r @ z)
        if not rz_new > 0.0:
            raise NotSPDError(f"preconditioner not positive definite: r^T M r = {rz_new:.3e}")
        beta = rz_new / rz
        betas.append(beta)
        p = z + beta * p
        rz = rz_new
    report = SolveReport(
        iterations=it,
        final_relative_residual=best_res / bnorm,
        converged=converged,
        residual_history=history,
        condition_estimate=condition_estimate(alphas, betas),
        alphas=alphas,
        betas=betas,
    )
    return best_x, report
