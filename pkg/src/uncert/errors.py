"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class UncertaintyError(Exception):
    """Base class for every error raised by :mod:`uncert`."""


class ShapeError(UncertaintyError, ValueError):
    """Input matrix has the wrong shape or is not symmetric."""


class DimensionError(ShapeError):
    """Odd order, non-square input, or mismatched dimensions."""


class DefinitenessError(UncertaintyError, ValueError):
    """Matrix is not (numerically) positive definite.

    The offending matrix is kept on ``matrix`` so that callers, in particular
    the consistency solver, can report where definiteness was lost.
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class InadmissibleError(DefinitenessError):
    """Covariance matrix violates ``C + i hbar/2 Omega >= 0``."""


class ConvergenceError(UncertaintyError, RuntimeError):
    """Fixed-point iteration did not converge within ``max_iter`` steps."""

    def __init__(self, message, residual=float("nan"), covariance=None, iterations=0):
        super().__init__(message)
        self.residual = residual
        self.covariance = covariance
        self.iterations = iterations


class ConstraintError(UncertaintyError, ValueError):
    """Parameters violate a declared constraint (e.g. ``4ab >= c**2``)."""


class DomainError(UncertaintyError, ValueError):
    """Argument outside the domain where a formula is valid."""


class DegenerateError(DomainError):
    """Input lies on a boundary where the requested construction degenerates."""
