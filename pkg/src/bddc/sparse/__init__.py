"""Sparse storage, ordering and direct-solve kernels."""
from .amd import amd_order
from .lu import (DEFAULT_PIVOT_THRESHOLD, SparseFactorization, equilibrate, lu_factor,
                 lu_solve, solve_residual)
from .matrix import (CompressedSparseMatrix, Permutation, as_vector, block_saddle,
                     dense_triple_product, spmm_dense, spmv, transpose)
from .mmio import read_matrix_market, write_matrix_market

__all__ = [
    "CompressedSparseMatrix", "Permutation", "SparseFactorization",
    "DEFAULT_PIVOT_THRESHOLD", "amd_order", "as_vector", "block_saddle",
    "dense_triple_product", "equilibrate", "lu_factor", "lu_solve", "read_matrix_market",
    "solve_residual", "spmm_dense", "spmv", "transpose", "write_matrix_market",
]
