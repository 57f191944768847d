"""Covariance matrices of zero-mean quantum states and the single-mode (u, v, w) coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, DomainError, ShapeError
from .symplectic import PhaseSpace, SYMMETRY_RTOL, symplectic_eigenvalues

#: default admissibility tolerance, in units of hbar
ADMISSIBILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric matrix of second moments ``c_{mu nu}`` in ``space``'s ordering.

    First moments are taken to vanish throughout. Admissibility is a predicate
    (:func:`is_admissible`), not something enforced here.
    """

    space: PhaseSpace
    matrix: NDArray[np.float64]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionError(
                f"expected a {self.space.dim}x{self.space.dim} matrix for {self.space.n_modes} modes, got {m.shape}"
            )
        scale = max(np.max(np.abs(m)), np.finfo(float).tiny)
        if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
            raise ShapeError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_array(cls, matrix: ArrayLike, hbar: float = 1.0) -> "CovarianceMatrix":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] % 2:
            raise DimensionError(f"cannot infer a mode count from shape {matrix.shape}")
        return cls(PhaseSpace(matrix.shape[0] // 2, hbar), matrix)

    @property
    def n_modes(self) -> int:
        return self.space.n_modes

    @property
    def hbar(self) -> float:
        return self.space.hbar

    def variance_p(self, k: int) -> float:
        return float(self.matrix[2 * k, 2 * k])

    def variance_q(self, k: int) -> float:
        return float(self.matrix[2 * k + 1, 2 * k + 1])

    def covariance_pq(self, k: int) -> float:
        return float(self.matrix[2 * k, 2 * k + 1])

    def cross(self, mu: int, nu: int) -> float:
        return float(self.matrix[mu, nu])

    def local_block(self, k: int) -> NDArray[np.float64]:
        return self.matrix[2 * k:2 * k + 2, 2 * k:2 * k + 2]

    def symplectic_eigenvalues(self) -> NDArray[np.float64]:
        return symplectic_eigenvalues(self.matrix)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True)
class MomentTriple:
    """Single-mode moments as ``u = (x + y)/2``, ``v = (x - y)/2`` and the covariance ``w``."""

    u: float
    v: float
    w: float

    def __post_init__(self):
        if not (self.u > 0 and self.u > abs(self.v)):
            raise DomainError(f"need u > |v| > -u for positive variances, got u={self.u}, v={self.v}")

    @property
    def x(self) -> float:
        return self.u + self.v

    @property
    def y(self) -> float:
        return self.u - self.v

    def interval(self) -> float:
        """Lorentzian square ``u^2 - v^2 - w^2`` (equals the determinant ``xy - w^2``)."""
        return self.u * self.u - self.v * self.v - self.w * self.w

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.u, self.v, self.w])


@dataclass(frozen=True)
class QuantumNumbers:
    n: tuple

    def __post_init__(self):
        n = tuple(int(k) for k in self.n)
        if any(k < 0 for k in n) or any(k != kk for k, kk in zip(n, self.n)):
            raise DomainError(f"quantum numbers must be non-negative integers, got {self.n!r}")
        object.__setattr__(self, "n", n)

    @classmethod
    def ground(cls, n_modes: int) -> "QuantumNumbers":
        return cls((0,) * n_modes)

    def __len__(self):
        return len(self.n)

    def __iter__(self):
        return iter(self.n)


def _as_qn(qn) -> QuantumNumbers:
    return qn if isinstance(qn, QuantumNumbers) else QuantumNumbers(tuple(qn))


def _min_symplectic(C: CovarianceMatrix) -> float:
    # raises DefinitenessError for non-positive-definite input
    return float(symplectic_eigenvalues(C.matrix)[-1])


def is_admissible(C: CovarianceMatrix, tol: float = ADMISSIBILITY_TOL) -> bool:
    """True iff ``C + i hbar Omega / 2 >= 0``, i.e. every symplectic eigenvalue is ``>= hbar/2``.

    ``tol`` is absolute in units of hbar.
    """
    return _min_symplectic(C) >= C.hbar * (0.5 - tol)


def is_pure_gaussian(C: CovarianceMatrix, tol: float = ADMISSIBILITY_TOL) -> bool:
    """True iff every symplectic eigenvalue equals ``hbar/2`` within ``tol * hbar``."""
    eigs = symplectic_eigenvalues(C.matrix)
    return bool(np.all(np.abs(eigs - 0.5 * C.hbar) <= tol * C.hbar))


def on_boundary(C: CovarianceMatrix, tol: float = ADMISSIBILITY_TOL) -> bool:
    """True iff the smallest symplectic eigenvalue equals ``hbar/2`` (``det(C + i hbar Omega/2) = 0``)."""
    return abs(_min_symplectic(C) - 0.5 * C.hbar) <= tol * C.hbar


def number_state_covariance(space: PhaseSpace, qn) -> CovarianceMatrix:
    """``hbar diag(n1 + 1/2, n1 + 1/2, ..., nN + 1/2, nN + 1/2)`` for a product of number states."""
    qn = _as_qn(qn)
    if len(qn) != space.n_modes:
        raise DimensionError(f"{len(qn)} quantum numbers for {space.n_modes} modes")
    diag = space.hbar * (np.repeat(np.asarray(qn.n, dtype=float), 2) + 0.5)
    return CovarianceMatrix(space, np.diag(diag))


def squeezed_number_triple(n: int, rho: float, theta: float, hbar: float = 1.0) -> MomentTriple:
    """Moments of a squeezed number state; they lie on the sheet ``u^2 - v^2 - w^2 = ((n + 1/2) hbar)^2``."""
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a non-negative integer, got {n!r}")
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho!r}")
    e_n = (n + 0.5) * hbar
    return MomentTriple(e_n * np.cosh(rho), e_n * np.sinh(rho) * np.cos(theta), e_n * np.sinh(rho) * np.sin(theta))


def triple_from_covariance(C) -> MomentTriple:
    m = np.asarray(C.matrix if isinstance(C, CovarianceMatrix) else C, dtype=float)
    if m.shape != (2, 2):
        raise DimensionError(f"moment triples exist for one mode only, got shape {m.shape}")
    x, y, w = m[0, 0], m[1, 1], 0.5 * (m[0, 1] + m[1, 0])
    return MomentTriple(0.5 * (x + y), 0.5 * (x - y), w)


def covariance_from_triple(t: MomentTriple, hbar: float = 1.0) -> CovarianceMatrix:
    return CovarianceMatrix(PhaseSpace(1, hbar), np.array([[t.u + t.v, t.w], [t.w, t.u - t.v]]))


def superposition_0M_variance(M: int, t: float, hbar: float = 1.0) -> float:
    """``(1 - t)(M + 1/2) hbar`` for the state ``sqrt(t)|0> + sqrt(1-t)|M>``.

    This is the literal two-term expression; it omits the ``t hbar/2`` vacuum
    contribution, so ``t`` is capped at ``2M/(2M + 1)`` where it reaches ``hbar/2``.
    The exact variance is :func:`superposition_0M_variance_exact`.
    """
    if int(M) != M or M < 2:
        raise DomainError(f"M must be an integer >= 2, got {M!r}")
    t_max = 1.0 - 1.0 / (2 * M + 1)
    if not 0.0 <= t <= t_max:
        raise DomainError(f"t must lie in [0, {t_max}] for M={M}, got {t!r}")
    return (1.0 - t) * (M + 0.5) * hbar


def superposition_0M_variance_exact(M: int, t: float, hbar: float = 1.0) -> float:
    """``t hbar/2 + (1 - t)(M + 1/2) hbar``: cross terms vanish for ``M >= 2``."""
    if int(M) != M or M < 2:
        raise DomainError(f"M must be an integer >= 2, got {M!r}")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    return 0.5 * t * hbar + (1.0 - t) * (M + 0.5) * hbar


def two_mode_squeezed_covariance(r: float, hbar: float = 1.0) -> CovarianceMatrix:
    """Two-mode squeezed vacuum; ``q1 - q2`` and ``p1 + p2`` are squeezed for ``r > 0``."""
    c = 0.5 * hbar * np.cosh(2 * r)
    s = 0.5 * hbar * np.sinh(2 * r)
    m = np.array([
        [c, 0.0, -s, 0.0],
        [0.0, c, 0.0, s],
        [-s, 0.0, c, 0.0],
        [0.0, s, 0.0, c],
    ])
    return CovarianceMatrix(PhaseSpace(2, hbar), m)


def product_covariance(blocks: Sequence[ArrayLike], hbar: float = 1.0) -> CovarianceMatrix:
    """Block-diagonal covariance from per-mode 2x2 blocks (a product state)."""
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    n = len(blocks)
    m = np.zeros((2 * n, 2 * n))
    for k, b in enumerate(blocks):
        m[2 * k:2 * k + 2, 2 * k:2 * k + 2] = b
    return CovarianceMatrix(PhaseSpace(n, hbar), m)
