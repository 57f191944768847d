"""Geometry of the uncertainty region.

For one mode the region is the solid bounded by the sheet
``u^2 - v^2 - w^2 = (hbar/2)^2`` of the (u, v, w) hyperboloid family; for N
modes it is the convex set of admissible covariance matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .covariance import CovarianceMatrix, MomentTriple, is_admissible
from .errors import DegenerateError, DimensionError, DomainError, InadmissibleError
from .symplectic import standard_form, williamson

#: relative width of the band treated as "on the boundary"
BOUNDARY_RTOL = 1e-8
#: hyperbolic-angle offset of the endpoint phi from the target (or from the edge of its backward cone)
PHI_OFFSET = 1.0
#: smallest clearance between phi and the backward cone, to keep the chord well conditioned
CONE_CLEARANCE = 0.25


@dataclass(frozen=True)
class HyperboloidSheet:
    """Upper sheet ``u^2 - v^2 - w^2 = e_n^2`` with ``e_n = (n + 1/2) hbar``."""

    n: int
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"sheet index must be a non-negative integer, got {self.n!r}")
        if not self.hbar > 0:
            raise DomainError(f"hbar must be positive, got {self.hbar!r}")

    @property
    def e_n(self) -> float:
        return (self.n + 0.5) * self.hbar

    def point(self, rho: float, theta: float) -> MomentTriple:
        e = self.e_n
        return MomentTriple(e * math.cosh(rho), e * math.sinh(rho) * math.cos(theta),
                            e * math.sinh(rho) * math.sin(theta))

    def contains(self, t: MomentTriple, tol: float = 1e-10) -> bool:
        """True iff ``t`` lies on this sheet within ``tol`` (relative to ``u^2``)."""
        return abs(t.interval() - self.e_n ** 2) <= tol * max(t.u * t.u, self.e_n ** 2)

    def parameters(self, t: MomentTriple) -> tuple:
        """Hyperbolic coordinates ``(rho, theta)`` of a point on the sheet."""
        if not self.contains(t, BOUNDARY_RTOL):
            raise DomainError(f"{t} is not on sheet {self.n}")
        rho = math.asinh(math.hypot(t.v, t.w) / self.e_n)
        return rho, math.atan2(t.w, t.v)


@dataclass(frozen=True)
class ConvexDecomposition:
    """``target = t0 * psi + (1 - t0) * phi`` with ``phi`` and ``psi`` on the lowest sheet."""

    phi: MomentTriple
    psi: MomentTriple
    t0: float

    def mixture(self) -> MomentTriple:
        return MomentTriple(*(self.t0 * self.psi.as_array() + (1 - self.t0) * self.phi.as_array()))


@dataclass(frozen=True)
class ConvexityReport:
    det_ok: bool
    admissible: bool
    det: float
    bound: float


@dataclass(frozen=True)
class HoleWitness:
    """Data showing that an admissible covariance is reached by mixing pure states.

    Mode ``k`` of the symplectically diagonal form is the state
    ``sqrt(t_k)|0> + sqrt(1 - t_k)|M>``, whose quadrature variance equals the
    symplectic eigenvalue ``s_k``. ``sigma`` maps that diagonal form back:
    ``target = sigma^-1 diag(s_1, s_1, ..., s_N, s_N) sigma^-T``.
    """

    M: int
    t: NDArray[np.float64]
    s: NDArray[np.float64]
    sigma: NDArray[np.float64]
    hbar: float

    def variances(self) -> NDArray[np.float64]:
        return 0.5 * self.t * self.hbar + (1 - self.t) * (self.M + 0.5) * self.hbar

    def reconstruct(self) -> NDArray[np.float64]:
        omega = standard_form(len(self.s))
        inv = -omega @ self.sigma.T @ omega
        out = inv @ np.diag(np.repeat(self.variances(), 2)) @ inv.T
        return 0.5 * (out + out.T)


def _e0(hbar: float) -> float:
    return 0.5 * hbar


def region_contains(t: MomentTriple, tol: float = 1e-10, hbar: float = 1.0) -> bool:
    """True iff ``u > 0`` and ``u^2 - v^2 - w^2 >= (hbar/2)^2 - tol hbar^2``."""
    return t.u > 0 and t.interval() >= _e0(hbar) ** 2 - tol * hbar * hbar


def sheet_of(t: MomentTriple, tol: float = 1e-9, hbar: float = 1.0) -> Optional[int]:
    """Index ``n`` of the sheet through ``t``, or None if it lies between sheets.

    ``tol`` is absolute in units of ``hbar^2``.
    """
    interval = t.interval()
    if t.u <= 0 or interval <= 0:
        return None
    n = max(0, round(math.sqrt(interval) / hbar - 0.5))
    if abs(interval - ((n + 0.5) * hbar) ** 2) <= tol * hbar * hbar:
        return n
    return None


def classify(t: MomentTriple, hbar: float = 1.0) -> str:
    """``"interior"``, ``"boundary"`` or ``"exterior"`` with a band of ``BOUNDARY_RTOL * u^2``."""
    gap = t.interval() - _e0(hbar) ** 2
    band = BOUNDARY_RTOL * max(t.u * t.u, _e0(hbar) ** 2)
    if abs(gap) <= band:
        return "boundary"
    return "interior" if gap > 0 else "exterior"


def convex_decompose(target: MomentTriple, angle_seed: float = 0.0, hbar: float = 1.0) -> ConvexDecomposition:
    """Write an interior triple as a mixture of two pure (boundary) triples.

    The construction lives in the vertical plane through ``target`` whose
    horizontal direction makes angle ``angle_seed`` with the target's own
    azimuth; for ``angle_seed = 0`` this is the plane through the u-axis.
    That plane cuts the lowest sheet in a hyperbola ``u^2 - s^2 = e'^2``. In
    light-cone coordinates ``L = u +- s`` the endpoint ``phi`` is taken one
    unit of hyperbolic angle past the target, or past the edge of the target's
    backward cone when that edge is closer than ``CONE_CLEARANCE``. The chord
    from ``phi`` through the target is then space-like and leaves the region at
    ``psi``, so no retries are needed.

    Raises:
        DegenerateError: ``target`` is on the boundary (only trivial mixtures exist).
        DomainError: ``target`` lies outside the region.
    """
    kind = classify(target, hbar)
    if kind == "boundary":
        raise DegenerateError(f"{target} is a boundary point; it admits no nontrivial mixture")
    if kind == "exterior":
        raise DomainError(f"{target} lies outside the uncertainty region")

    beta = math.atan2(target.w, target.v) + angle_seed
    h = np.array([math.cos(beta), math.sin(beta)])
    h_perp = np.array([-h[1], h[0]])
    vw = np.array([target.v, target.w])
    s_xi = float(vw @ h)
    k = float(vw @ h_perp)
    e = math.hypot(_e0(hbar), k)

    lp_xi, lm_xi = target.u + s_xi, target.u - s_xi
    rho_xi = 0.5 * math.log(lp_xi / lm_xi)
    # chord is time-like while rho lies in (-ln(lm_xi/e), ln(lp_xi/e))
    rho_b = math.log(lp_xi / e)
    rho_phi = rho_xi + PHI_OFFSET
    if rho_phi < rho_b + CONE_CLEARANCE:
        rho_phi = rho_b + PHI_OFFSET

    lp_phi, lm_phi = e * math.exp(rho_phi), e * math.exp(-rho_phi)
    dp, dm = lp_xi - lp_phi, lm_xi - lm_phi
    tau = -(lp_phi * dm + lm_phi * dp) / (dp * dm)
    lp_psi, lm_psi = lp_phi + tau * dp, lm_phi + tau * dm

    def lift(lp, lm):
        u, s = 0.5 * (lp + lm), 0.5 * (lp - lm)
        v, w = s * h + k * h_perp
        return MomentTriple(u, float(v), float(w))

    return ConvexDecomposition(phi=lift(lp_phi, lm_phi), psi=lift(lp_psi, lm_psi), t0=1.0 / tau)


def _is_det_boundary(C: CovarianceMatrix, rtol: float = BOUNDARY_RTOL) -> bool:
    bound = (0.5 * C.hbar) ** (2 * C.n_modes)
    return abs(np.linalg.det(C.matrix) - bound) <= rtol * bound


def convexity_check(C1: CovarianceMatrix, C2: CovarianceMatrix, t: float) -> ConvexityReport:
    """Check the mixture ``t C1 + (1 - t) C2`` of two boundary covariances.

    Raises:
        DomainError: ``t`` outside [0, 1] or an input not on the boundary.
        DimensionError: inputs of different size or hbar.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    if C1.space != C2.space:
        raise DimensionError("covariances live in different phase spaces")
    for C in (C1, C2):
        if not _is_det_boundary(C):
            raise DomainError("convexity_check needs covariances with det C = (hbar/2)^(2N)")
    mix = CovarianceMatrix(C1.space, t * C1.matrix + (1 - t) * C2.matrix)
    bound = (0.5 * C1.hbar) ** (2 * C1.n_modes)
    det = float(np.linalg.det(mix.matrix))
    return ConvexityReport(det_ok=det >= bound * (1 - 1e-10), admissible=is_admissible(mix), det=det, bound=bound)


def hole_witness(target: CovarianceMatrix) -> HoleWitness:
    """Exhibit ``target`` as a symplectic image of a product of |0>/|M> superpositions.

    ``M`` is the smallest integer ``>= 2`` with ``s_max <= (M + 1/2) hbar`` and
    ``t_k = ((M + 1/2) hbar - s_k) / (M hbar)``.

    Raises:
        InadmissibleError: ``target`` is not admissible.
    """
    if not is_admissible(target):
        raise InadmissibleError("hole_witness needs an admissible covariance", matrix=target.matrix)
    hbar = target.hbar
    res = williamson(target.matrix)
    s = res.sympl_eigs
    M = max(2, math.ceil(s[0] / hbar - 0.5))
    t = np.clip(((M + 0.5) * hbar - s) / (M * hbar), 0.0, 1.0)
    omega = standard_form(target.n_modes)
    # sigma = Sigma^-T for the Williamson transform Sigma
    sigma = -omega @ res.sigma @ omega
    return HoleWitness(M=M, t=t, s=s, sigma=sigma, hbar=hbar)
