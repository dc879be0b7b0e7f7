"""Exception hierarchy shared by all modules."""


class BddcError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(BddcError, ValueError):
    """Operand shapes do not conform."""


class FactorizationError(BddcError):
    """Sparse LU could not find an acceptable pivot."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EquilibrationError(BddcError, ValueError):
    """A row or column of the matrix is structurally zero."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotSPDError(BddcError):
    """Conjugate gradient met a direction with non-positive curvature."""


class ConvergenceError(BddcError):
    """An inner iterative solve failed to reach its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DecompositionError(BddcError, ValueError):
    """Invalid grid or subdomain layout."""


class BundleError(BddcError):
    """A subdomain bundle on disk is missing, malformed or inconsistent."""

    def __init__(self, message, path=None, dof=None):
        super().__init__(message)
        self.path = path
        self.dof = dof
