"""Q1 Poisson model problem on the unit square and its k x k subdomain layout."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import DecompositionError, DimensionError
from .sparse.matrix import INDEX, CompressedSparseMatrix, as_vector

# Q1 stiffness of -Laplace on a square element, nodes SW, SE, NE, NW.
# Independent of the element size in 2D.
Q1_STIFFNESS = np.array([
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
]) / 6.0


class DofKind(IntEnum):
    INTERIOR = 0
    EDGE = 1
    CORNER = 2


@dataclass(frozen=True)
class StructuredGrid:
    cells_per_side: int

    def __post_init__(self):
        if self.cells_per_side < 2:
            raise DecompositionError("cells_per_side must be at least 2")

    @property
    def mesh_width(self):
        return 1.0 / self.cells_per_side

    @property
    def free_dofs(self):
        return (self.cells_per_side - 1) ** 2

    def dof_index(self, ix, iy):
        """Global dof of vertex (ix, iy), or -1 on the Dirichlet boundary."""
        n = self.cells_per_side
        ix = np.asarray(ix)
        iy = np.asarray(iy)
        inside = (ix > 0) & (ix < n) & (iy > 0) & (iy < n)
        return np.where(inside, (iy - 1) * (n - 1) + (ix - 1), -1)

    def dof_coordinates(self):
        n = self.cells_per_side
        t = np.arange(1, n) / n
        x, y = np.meshgrid(t, t)
        return x.ravel(), y.ravel()


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Overlapping-interface subdomain layout.

    ``subdomain_dofs[i]`` lists global dofs of subdomain i, interior dofs
    first; the first ``n_interior[i]`` entries are its interior.
    """

    n_global: int
    subdomain_dofs: list
    n_interior: np.ndarray
    multiplicity: np.ndarray
    kinds: np.ndarray
    entities: np.ndarray
    weights: list
    k: int | None = None
    grid: StructuredGrid | None = field(default=None, repr=False)

    @property
    def n_subdomains(self):
        return len(self.subdomain_dofs)

    def interior_dofs(self, i):
        return self.subdomain_dofs[i][: self.n_interior[i]]

    def restrict(self, i, x):
        return restrict(self, i, x)

    def prolong(self, i, xi, out=None):
        return prolong(self, i, xi, out)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Corner-value and edge-average primal constraints per subdomain."""

    C: list
    primal_maps: list
    n_coarse: int
    n_corners: int


def _multiplicity(n_global, subdomain_dofs):
    mult = np.zeros(n_global, dtype=INDEX)
    for d in subdomain_dofs:
        np.add.at(mult, d, 1)
    return mult


def _order_interior_first(dofs, mult):
    dofs = np.sort(np.asarray(dofs, dtype=INDEX))
    inner = mult[dofs] == 1
    return np.concatenate([dofs[inner], dofs[~inner]]), int(inner.sum())


def classify_dofs(decomp: Decomposition, corner_mask=None):
    """Per-dof (kind, entity id).

    Interior dofs have multiplicity one. Shared dofs are corners when they
    are flagged in ``corner_mask`` (subdomain-corner vertices) or, without
    a mask, when three or more subdomains share them; the remaining shared
    dofs are edge dofs, grouped into one edge per pair of sharing subdomains.
    Corners and edges are numbered in ascending order of their first dof.
    """
    mult = decomp.multiplicity
    n = decomp.n_global
    kinds = np.full(n, DofKind.INTERIOR, dtype=np.int8)
    entities = np.full(n, -1, dtype=INDEX)
    owners = [[] for _ in range(n)]
    for s, d in enumerate(decomp.subdomain_dofs):
        for g in d[decomp.n_interior[s]:].tolist():
            owners[g].append(s)
    if corner_mask is None:
        corner = mult >= 3
    else:
        corner = np.asarray(corner_mask, dtype=bool) & (mult >= 2)
    edge_ids = {}
    n_corners = 0
    for g in range(n):
        if mult[g] == 1:
            continue
        if corner[g]:
            kinds[g] = DofKind.CORNER
            entities[g] = n_corners
            n_corners += 1
        elif mult[g] == 2:
            key = tuple(sorted(owners[g]))
            kinds[g] = DofKind.EDGE
            entities[g] = edge_ids.setdefault(key, len(edge_ids))
        else:
            raise DecompositionError(
                f"dof {g} is shared by {mult[g]} subdomains but is not a subdomain corner")
    return kinds, entities


def build_weights(decomp: Decomposition):
    """Per-subdomain weights ``1 / multiplicity`` at each local dof."""
    return [1.0 / decomp.multiplicity[d] for d in decomp.subdomain_dofs]


def make_decomposition(n_global, subdomain_dofs, corner_mask=None, k=None, grid=None,
                       kinds=None, entities=None) -> Decomposition:
    """Order local dofs, count multiplicities and classify.

    Explicit ``kinds``/``entities`` (as read from a bundle) bypass the
    classification but are validated against the multiplicities.
    """
    mult = _multiplicity(n_global, subdomain_dofs)
    uncovered = np.flatnonzero(mult == 0)
    if uncovered.size:
        raise DecompositionError(f"global dof {uncovered[0]} belongs to no subdomain")
    ordered, n_int = [], []
    for d in subdomain_dofs:
        o, ni = _order_interior_first(d, mult)
        if np.unique(o).size != o.size:
            raise DecompositionError("a subdomain lists the same global dof twice")
        ordered.append(o)
        n_int.append(ni)
    stub = Decomposition(n_global, ordered, np.array(n_int, dtype=INDEX), mult,
                         np.zeros(n_global, np.int8), np.full(n_global, -1, INDEX),
                         [], k, grid)
    if kinds is None:
        kinds, entities = classify_dofs(stub, corner_mask)
    else:
        kinds = np.asarray(kinds, dtype=np.int8)
        entities = np.asarray(entities, dtype=INDEX)
        validate_classes(mult, kinds, entities)
    decomp = Decomposition(n_global, ordered, stub.n_interior, mult, kinds, entities,
                           [], k, grid)
    weights = build_weights(decomp)
    return Decomposition(n_global, ordered, stub.n_interior, mult, kinds, entities,
                         weights, k, grid)


def validate_classes(mult, kinds, entities):
    for g in range(mult.size):
        kind = kinds[g]
        if kind == DofKind.INTERIOR and mult[g] != 1:
            raise DecompositionError(
                f"dof {g} is marked interior but shared by {mult[g]} subdomains")
        if kind == DofKind.EDGE and mult[g] != 2:
            raise DecompositionError(
                f"dof {g} is marked as an edge dof but shared by {mult[g]} subdomains")
        if kind == DofKind.CORNER and mult[g] < 2:
            raise DecompositionError(f"dof {g} is marked as a corner but is not shared")
        if kind != DofKind.INTERIOR and entities[g] < 0:
            raise DecompositionError(f"dof {g} has no edge/corner id")


def build_constraints(decomp: Decomposition) -> ConstraintSet:
    """One primal unknown per corner and per edge; corners are numbered first."""
    kinds, ent = decomp.kinds, decomp.entities
    is_corner = kinds == DofKind.CORNER
    n_corners = int(ent[is_corner].max() + 1) if is_corner.any() else 0
    is_edge = kinds == DofKind.EDGE
    n_edges = int(ent[is_edge].max() + 1) if is_edge.any() else 0
    C_list, maps = [], []
    for s, dofs in enumerate(decomp.subdomain_dofs):
        local = np.arange(dofs.size)
        kk = kinds[dofs]
        primal = np.where(kk == DofKind.CORNER, ent[dofs],
                          np.where(kk == DofKind.EDGE, n_corners + ent[dofs], -1))
        keep = primal >= 0
        rows_global = np.unique(primal[keep])
        if rows_global.size == 0:
            raise DecompositionError(
                f"subdomain {s} has no primal constraints; its local problem would be singular")
        row_of = {int(g): r for r, g in enumerate(rows_global)}
        r_idx = np.array([row_of[int(g)] for g in primal[keep]], dtype=INDEX)
        counts = np.bincount(r_idx, minlength=rows_global.size)
        vals = 1.0 / counts[r_idx]
        C_list.append(CompressedSparseMatrix.from_coo(
            rows_global.size, dofs.size, r_idx, local[keep], vals))
        maps.append(rows_global.astype(INDEX))
    return ConstraintSet(C_list, maps, n_corners + n_edges, n_corners)


def restrict(decomp: Decomposition, i, x):
    x = as_vector(x, decomp.n_global)
    return x[decomp.subdomain_dofs[i]]


def prolong(decomp: Decomposition, i, xi, out=None):
    """Scatter-add a local vector into ``out`` (a fresh zero vector by default)."""
    dofs = decomp.subdomain_dofs[i]
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != dofs.shape:
        raise DimensionError(f"local vector of subdomain {i} has shape {xi.shape}, "
                             f"expected {dofs.shape}")
    if out is None:
        out = np.zeros(decomp.n_global)
    # dofs within one subdomain are distinct, so fancy-index add is exact
    out[dofs] += xi
    return out


def assemble_global(local_matrices, decomp: Decomposition) -> CompressedSparseMatrix:
    """``sum_i R_i^T A_i R_i`` with contributions taken in subdomain order."""
    rows, cols, vals = [], [], []
    for Ai, dofs in zip(local_matrices, decomp.subdomain_dofs):
        rows.append(dofs[Ai.row_indices()])
        cols.append(dofs[Ai.col_indices])
        vals.append(Ai.values)
    n = decomp.n_global
    if not rows:
        return CompressedSparseMatrix.zeros(n, n)
    return CompressedSparseMatrix.from_coo(
        n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def assemble_poisson(grid: StructuredGrid, decomposition_k: int):
    """Neumann subdomain matrices, the global matrix and the decomposition.

    Each element contributes only to the subdomain that owns it; Dirichlet
    boundary vertices are eliminated.
    """
    n = grid.cells_per_side
    k = int(decomposition_k)
    if k < 2:
        raise DecompositionError("need at least 2 subdomains per side")
    if n % k:
        raise DecompositionError(f"{n} cells per side cannot be split into {k} subdomains")
    m = n // k
    if m < 2:
        raise DecompositionError("subdomains need at least 2 cells per side")

    dof_lists = []
    for sy in range(k):
        for sx in range(k):
            ix, iy = np.meshgrid(np.arange(sx * m, sx * m + m + 1),
                                 np.arange(sy * m, sy * m + m + 1))
            g = grid.dof_index(ix.ravel(), iy.ravel())
            dof_lists.append(g[g >= 0])
    vx, vy = np.meshgrid(np.arange(1, n), np.arange(1, n))
    corner_mask = ((vx % m == 0) & (vy % m == 0)).ravel()
    decomp = make_decomposition(grid.free_dofs, dof_lists, corner_mask, k=k, grid=grid)

    ex, ey = np.meshgrid(np.arange(m), np.arange(m))
    ex, ey = ex.ravel(), ey.ravel()
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    glob2loc = np.full(grid.free_dofs, -1, dtype=INDEX)
    local_matrices = []
    for s in range(k * k):
        sy, sx = divmod(s, k)
        dofs = decomp.subdomain_dofs[s]
        glob2loc[dofs] = np.arange(dofs.size)
        nodes = np.stack([grid.dof_index(sx * m + ex + dx, sy * m + ey + dy)
                          for dx, dy in corners], axis=1)
        loc = np.where(nodes >= 0, glob2loc[np.maximum(nodes, 0)], -1)
        rr = np.repeat(loc, 4, axis=1).ravel()
        cc = np.tile(loc, (1, 4)).ravel()
        vv = np.tile(Q1_STIFFNESS.ravel(), loc.shape[0])
        keep = (rr >= 0) & (cc >= 0)
        local_matrices.append(CompressedSparseMatrix.from_coo(
            dofs.size, dofs.size, rr[keep], cc[keep], vv[keep]))
        glob2loc[dofs] = -1
    A = assemble_global(local_matrices, decomp)
    return A, local_matrices, decomp
