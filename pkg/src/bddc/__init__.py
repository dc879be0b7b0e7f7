"""BDDC domain-decomposition preconditioning for conjugate gradients."""
from .decomposition import (ConstraintSet, Decomposition, DofKind, StructuredGrid,
                            assemble_global, assemble_poisson, build_constraints,
                            build_weights, classify_dofs, prolong, restrict)
from .krylov import SolveReport, SolverOptions, condition_estimate, pcg
from .preconditioner import (BddcPreconditioner, CoarseProblem, SubdomainData,
                             assemble_coarse, setup_bddc, setup_subdomain)
from .problem import Problem, poisson_problem

__version__ = "0.1.0"

__all__ = [
    "BddcPreconditioner", "CoarseProblem", "ConstraintSet", "Decomposition", "DofKind",
    "Problem", "SolveReport", "SolverOptions", "StructuredGrid", "SubdomainData",
    "assemble_coarse", "assemble_global", "assemble_poisson", "build_constraints",
    "build_weights", "classify_dofs", "condition_estimate", "pcg", "poisson_problem",
    "prolong", "restrict", "setup_bddc", "setup_subdomain",
]
