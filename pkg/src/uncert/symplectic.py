"""Symplectic linear algebra in the interleaved ordering z = (p1, q1, ..., pN, qN).

Every module takes its symplectic form from :func:`standard_form`; with
``[q, p] = i hbar`` the single-mode block is ``[[0, -1], [1, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DefinitenessError, DimensionError, ShapeError

#: smallest-to-largest eigenvalue ratio below which Williamson refuses the input
DEGENERACY_FLOOR = 1e-12
#: relative asymmetry tolerated before the input is symmetrised
SYMMETRY_RTOL = 1e-10

_BLOCK = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class PhaseSpace:
    """Phase space of ``n_modes`` canonical pairs with Planck constant ``hbar``."""

    n_modes: int
    hbar: float = 1.0
    ordering: str = field(default="pqpq", init=False)

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes!r}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def omega(self) -> NDArray[np.float64]:
        return standard_form(self.n_modes)

    def vacuum(self) -> NDArray[np.float64]:
        """Covariance matrix of the vacuum, ``(hbar/2) I``."""
        return 0.5 * self.hbar * np.eye(self.dim)


def standard_form(space: Union[PhaseSpace, int]) -> NDArray[np.float64]:
    """Return the symplectic form Omega for ``space`` (or a mode count)."""
    n = space.n_modes if isinstance(space, PhaseSpace) else int(space)
    if n < 1:
        raise DimensionError(f"need at least one mode, got {n}")
    return np.kron(np.eye(n), _BLOCK)


def _square_even(M: ArrayLike, name: str = "matrix") -> NDArray[np.float64]:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] % 2:
        raise DimensionError(f"{name} must have even order, got {M.shape[0]}")
    return M


def _symmetric_part(M: NDArray[np.float64]) -> NDArray[np.float64]:
    scale = max(np.max(np.abs(M)), np.finfo(float).tiny)
    if np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * scale:
        raise ShapeError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def is_symplectic(M: ArrayLike, tol: float = 1e-10) -> bool:
    """True iff ``max|M^T Omega M - Omega| <= tol``."""
    M = _square_even(M)
    omega = standard_form(M.shape[0] // 2)
    return bool(np.max(np.abs(M.T @ omega @ M - omega)) <= tol)


@dataclass(frozen=True)
class WilliamsonResult:
    """Symplectic diagonalisation ``M = sigma^T D sigma``.

    ``sympl_eigs`` is sorted in descending order and row pair ``(2k, 2k+1)`` of
    ``sigma`` belongs to ``sympl_eigs[k]``.
    """

    sigma: NDArray[np.float64]
    sympl_eigs: NDArray[np.float64]

    @property
    def d(self) -> NDArray[np.float64]:
        return np.diag(np.repeat(self.sympl_eigs, 2))

    def reconstruct(self) -> NDArray[np.float64]:
        return self.sigma.T @ self.d @ self.sigma


def _checked_sqrt(M: ArrayLike):
    M = _symmetric_part(_square_even(M))
    evals, evecs = np.linalg.eigh(M)
    if evals[-1] <= 0 or evals[0] < DEGENERACY_FLOOR * evals[-1]:
        raise DefinitenessError(
            f"matrix is not positive definite (eigenvalues {evals[0]:.3e} .. {evals[-1]:.3e})",
            matrix=M,
        )
    root = (evecs * np.sqrt(evals)) @ evecs.T
    return M, root


def _hermitian_form(root: NDArray[np.float64]):
    # i * M^{1/2} Omega M^{1/2} is Hermitian with spectrum +-lambda_k
    n = root.shape[0] // 2
    antisym = root @ standard_form(n) @ root
    return np.linalg.eigh(1j * antisym)


def williamson(M: ArrayLike) -> WilliamsonResult:
    """Williamson decomposition of a symmetric positive-definite matrix.

    Works through the antisymmetric matrix ``A = M^{1/2} Omega M^{1/2}``: the
    eigenvectors of the Hermitian ``iA`` for its positive eigenvalues give an
    orthogonal ``K`` with ``K^T A K = D Omega``, and ``sigma = D^{-1/2} K^T M^{1/2}``.

    Raises:
        DimensionError: ``M`` not square of even order.
        ShapeError: ``M`` not symmetric.
        DefinitenessError: smallest eigenvalue below ``DEGENERACY_FLOOR`` times the largest.
    """
    M, root = _checked_sqrt(M)
    n = M.shape[0] // 2
    evals, evecs = _hermitian_form(root)
    # eigh sorts ascending; the last n are the positive ones
    lam = evals[n:][::-1]
    vecs = evecs[:, n:][:, ::-1]
    K = np.empty((2 * n, 2 * n))
    K[:, 0::2] = np.sqrt(2.0) * vecs.real
    K[:, 1::2] = np.sqrt(2.0) * vecs.imag
    scale = np.repeat(1.0 / np.sqrt(lam), 2)
    sigma = scale[:, None] * (K.T @ root)
    return WilliamsonResult(sigma=sigma, sympl_eigs=lam)


def symplectic_eigenvalues(M: ArrayLike) -> NDArray[np.float64]:
    """Symplectic eigenvalues of ``M`` in descending order (no sigma built)."""
    _, root = _checked_sqrt(M)
    n = root.shape[0] // 2
    evals = np.linalg.eigvalsh(1j * (root @ standard_form(n) @ root))
    return evals[n:][::-1].copy()


def single_mode_factors(b: float, gamma: float):
    """Shear ``G_b = [[1, 0], [b, 1]]`` and squeezer ``S_gamma = diag(e^-gamma, e^gamma)``."""
    G = np.array([[1.0, 0.0], [b, 1.0]])
    S = np.diag([np.exp(-gamma), np.exp(gamma)])
    return G, S


def apply_congruence(sigma: ArrayLike, C: ArrayLike) -> NDArray[np.float64]:
    """Return ``sigma C sigma^T``, the covariance after the transform ``z -> sigma z``."""
    sigma = _square_even(sigma, "sigma")
    C = _square_even(C, "C")
    if sigma.shape != C.shape:
        raise DimensionError(f"sigma {sigma.shape} and C {C.shape} differ in size")
    out = sigma @ C @ sigma.T
    return 0.5 * (out + out.T)


# Elementary transforms. Passive ones come from a unitary U acting on
# a_k = (q_k + i p_k)/sqrt(2 hbar), which gives the real block [[Re U, Im U], [-Im U, Re U]]
# in each (p, q) x (p, q) sector.


def passive(U: ArrayLike) -> NDArray[np.float64]:
    """Orthogonal symplectic matrix of the passive (number-preserving) unitary ``U``."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = U.real
    out[0::2, 1::2] = U.imag
    out[1::2, 0::2] = -U.imag
    out[1::2, 1::2] = U.real
    return out


def rotation(theta: float) -> NDArray[np.float64]:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def squeezer(r: float) -> NDArray[np.float64]:
    return np.diag([np.exp(-r), np.exp(r)])


def beamsplitter(n_modes: int, i: int, j: int, theta: float, phi: float = 0.0) -> NDArray[np.float64]:
    """Two-mode mixer between modes ``i`` and ``j`` embedded in ``n_modes``."""
    U = np.eye(n_modes, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    U[i, i] = c
    U[j, j] = c
    U[i, j] = -np.exp(-1j * phi) * s
    U[j, i] = np.exp(1j * phi) * s
    return passive(U)


def local(blocks) -> NDArray[np.float64]:
    """Block-diagonal matrix from per-mode 2x2 blocks."""
    blocks = list(blocks)
    out = np.zeros((2 * len(blocks), 2 * len(blocks)))
    for k, blk in enumerate(blocks):
        out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = blk
    return out


def random_symplectic(n_modes: int, rng: np.random.Generator, max_squeeze: float = 1.0,
                      product: bool = False) -> NDArray[np.float64]:
    """Random symplectic matrix: passive * squeeze * passive.

    With ``product=True`` the result is a direct sum of single-mode transforms.
    """
    def single():
        return rotation(rng.uniform(0, 2 * np.pi)) @ squeezer(rng.uniform(-max_squeeze, max_squeeze)) \
            @ rotation(rng.uniform(0, 2 * np.pi))

    if product:
        return local(single() for _ in range(n_modes))
    Z = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    Q1, _ = np.linalg.qr(Z)
    Z = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    Q2, _ = np.linalg.qr(Z)
    sq = local(squeezer(r) for r in rng.uniform(-max_squeeze, max_squeeze, n_modes))
    return passive(Q1) @ sq @ passive(Q2)
