"""Ready-to-solve model problems: matrices, decomposition and right-hand side."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import Decomposition, StructuredGrid, assemble_poisson
from .sparse.matrix import CompressedSparseMatrix


def exact_solution(x, y):
    """Manufactured solution, zero on the boundary of the unit square.

    Not an eigenfunction of the discrete Laplacian, so unpreconditioned CG
    has real work to do on the resulting right-hand side.
    """
    return np.sin(np.pi * x) * np.sin(np.pi * y) * np.exp(x - y)


def source_term(x, y):
    """``-Laplace(exact_solution)``."""
    sx, cx = np.sin(np.pi * x), np.cos(np.pi * x)
    sy, cy = np.sin(np.pi * y), np.cos(np.pi * y)
    pi = np.pi
    return np.exp(x - y) * ((2 * pi * pi - 2) * sx * sy - 2 * pi * cx * sy + 2 * pi * sx * cy)


def load_vector(grid: StructuredGrid, f=source_term, order=3):
    """Consistent Q1 load vector ``b_j = int f phi_j`` by tensor Gauss quadrature."""
    n = grid.cells_per_side
    h = grid.mesh_width
    pts, wts = np.polynomial.legendre.leggauss(order)
    pts = 0.5 * (pts + 1.0)
    wts = 0.5 * wts
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()
    b = np.zeros(grid.free_dofs)
    shape = [(0, 0, lambda s, t: (1 - s) * (1 - t)),
             (1, 0, lambda s, t: s * (1 - t)),
             (1, 1, lambda s, t: s * t),
             (0, 1, lambda s, t: (1 - s) * t)]
    for s, ws in zip(pts, wts):
        for t, wt in zip(pts, wts):
            fv = f((ex + s) * h, (ey + t) * h) * (ws * wt * h * h)
            for dx, dy, phi in shape:
                g = grid.dof_index(ex + dx, ey + dy)
                inside = g >= 0
                b += np.bincount(g[inside], weights=fv[inside] * phi(s, t),
                                 minlength=b.size)
    return b


@dataclass(frozen=True, eq=False)
class Problem:
    A: CompressedSparseMatrix
    local_matrices: list
    decomposition: Decomposition
    rhs: np.ndarray
    exact: np.ndarray | None = None
    label: str = ""


def poisson_problem(k, local_cells, rhs="manufactured", seed=0) -> Problem:
    """k x k subdomains of ``local_cells``^2 Q1 elements each.

    ``rhs="manufactured"`` uses the load vector of :func:`source_term` and
    attaches nodal values of :func:`exact_solution`; ``rhs="random"`` draws
    a standard normal vector from ``seed``.
    """
    grid = StructuredGrid(k * local_cells)
    A, local, decomp = assemble_poisson(grid, k)
    if rhs == "manufactured":
        b = load_vector(grid)
        x, y = grid.dof_coordinates()
        exact = exact_solution(x, y)
    elif rhs == "random":
        b = np.random.default_rng(seed).standard_normal(grid.free_dofs)
        exact = None
    else:
        raise ValueError(f"unknown right-hand side kind '{rhs}'")
    return Problem(A, local, decomp, b, exact, label=f"poisson k={k} m={local_cells}")
