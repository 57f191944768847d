"""Uncertainty functionals of second moments and their extremal covariance matrices.

A functional ``f`` depends on the ``N(2N+1)`` independent moments ``c_{mu nu}``,
``mu <= nu``. Its partials are arranged in a symmetric array ``P`` with
``P[mu, nu] = df/dc_{mu nu}``; the matrix ``F`` used by the solvers keeps the
diagonal of ``P`` and halves its off-diagonal entries, so that ``Tr(C F)`` is
the first-order change of ``f``.

Extrema are the fixed points ``C = sigma^{-1} N sigma^{-T}``, where
``F(C) = sigma^T D sigma`` is the Williamson decomposition and
``N = hbar diag(n_k + 1/2)`` with ``n_k`` attached to the ``k``-th largest
symplectic eigenvalue of ``F``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize as _scipy_minimize

from .covariance import CovarianceMatrix, QuantumNumbers, _as_qn, number_state_covariance
from .errors import ConvergenceError, DefinitenessError, DimensionError
from .symplectic import PhaseSpace, passive, standard_form, williamson

log = logging.getLogger(__name__)

Matrix = NDArray[np.float64]


@dataclass(frozen=True)
class UncertaintyFunctional:
    """A smooth real function of the second moments.

    ``evaluate`` receives the raw ``2N x 2N`` covariance array. ``gradient``,
    when given, returns the symmetric array of partials described in the module
    docstring; otherwise central finite differences are used.
    """

    space: PhaseSpace
    evaluate: Callable[[Matrix], float]
    gradient: Optional[Callable[[Matrix], Matrix]] = None
    label: str = "f"

    def __call__(self, C) -> float:
        return float(self.evaluate(_raw(C)))

    def partials(self, C) -> Matrix:
        C = _raw(C)
        if self.gradient is not None:
            return np.asarray(self.gradient(C), dtype=float)
        return finite_difference_partials(self.evaluate, C, self.space.hbar)

    def scaled(self, alpha: float) -> "UncertaintyFunctional":
        ev, gr = self.evaluate, self.gradient
        return UncertaintyFunctional(
            self.space,
            lambda C: alpha * ev(C),
            None if gr is None else (lambda C: alpha * gr(C)),
            f"{alpha:g}*{self.label}",
        )


def _raw(C) -> Matrix:
    return C.matrix if isinstance(C, CovarianceMatrix) else np.asarray(C, dtype=float)


def finite_difference_partials(evaluate: Callable[[Matrix], float], C: Matrix, hbar: float = 1.0) -> Matrix:
    """Central differences with step ``1e-6 * max(hbar, max|C|)``; c_{mu nu} and c_{nu mu} move together."""
    C = np.array(C, dtype=float)
    n = C.shape[0]
    h = 1e-6 * max(hbar, np.max(np.abs(C)))
    P = np.empty((n, n))
    for mu in range(n):
        for nu in range(mu, n):
            E = np.zeros((n, n))
            E[mu, nu] = E[nu, mu] = h
            P[mu, nu] = P[nu, mu] = (evaluate(C + E) - evaluate(C - E)) / (2 * h)
    return P


def f_matrix(f: UncertaintyFunctional, C) -> Matrix:
    """Matrix ``F``: diagonal ``f_{c_mu mu}``, off-diagonal ``f_{c_mu nu} / 2``."""
    P = f.partials(C)
    F = 0.5 * (P + P.T)
    off = ~np.eye(F.shape[0], dtype=bool)
    F[off] *= 0.5
    return F


# -- a few generic constructors ------------------------------------------------


def linear(space: PhaseSpace, weights, label: str = "linear") -> UncertaintyFunctional:
    """``f(C) = Tr(C W)`` for symmetric ``W``; its F matrix is ``W`` itself."""
    W = np.asarray(weights, dtype=float)
    W = 0.5 * (W + W.T)
    P = 2.0 * W
    np.fill_diagonal(P, np.diag(W))
    return UncertaintyFunctional(space, lambda C: float(np.sum(C * W)), lambda C: P, label)


def variance_sum(space: PhaseSpace, vectors, label: str = "variance sum") -> UncertaintyFunctional:
    """Sum of variances ``a^T C a`` of the linear combinations ``a^T z``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    if vectors.shape[1] != space.dim:
        raise DimensionError(f"coefficient vectors must have length {space.dim}")
    return linear(space, vectors.T @ vectors, label)


def determinant(space: PhaseSpace) -> UncertaintyFunctional:
    """``det C``; its F matrix is ``det(C) C^{-1}``."""

    def grad(C):
        d = np.linalg.det(C)
        P = 2.0 * d * np.linalg.inv(C)
        np.fill_diagonal(P, 0.5 * np.diag(P))
        return P

    return UncertaintyFunctional(space, lambda C: float(np.linalg.det(C)), grad, "det C")


def separable_sum(fs: Sequence[UncertaintyFunctional]) -> UncertaintyFunctional:
    """Sum of single-mode functionals, the k-th acting on mode k."""
    fs = list(fs)
    for f in fs:
        if f.space.n_modes != 1:
            raise DimensionError("separable_sum takes single-mode functionals")
    hbar = fs[0].space.hbar
    space = PhaseSpace(len(fs), hbar)

    def ev(C):
        return sum(f.evaluate(C[2 * k:2 * k + 2, 2 * k:2 * k + 2]) for k, f in enumerate(fs))

    def grad(C):
        P = np.zeros_like(C)
        for k, f in enumerate(fs):
            P[2 * k:2 * k + 2, 2 * k:2 * k + 2] = f.partials(C[2 * k:2 * k + 2, 2 * k:2 * k + 2])
        return P

    return UncertaintyFunctional(space, ev, grad, " + ".join(f.label for f in fs))


# -- fixed-point solvers ---------------------------------------------------------


#: a step must shrink the residual below this fraction of the previous one to count as progress
STALL_RATIO = 0.99
#: consecutive successful steps before the damping factor is restored
RESTORE_AFTER = 5


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 0.5
    max_halvings: int = 6


@dataclass(frozen=True)
class ExtremumResult:
    """Extremal covariance of a functional for quantum numbers ``qn``.

    ``residual`` is ``||C - sigma^{-1} N sigma^{-T}||_F`` at the returned ``C``
    and ``trace_gap`` is ``|Tr(C F) - Tr(D N)|``.
    """

    covariance: CovarianceMatrix
    value: float
    qn: QuantumNumbers
    residual: float
    iterations: int
    f_matrix: Matrix
    sympl_eigs: Matrix
    trace_gap: float
    excited_values: Optional[dict] = None
    minimal: Optional[bool] = None

    @property
    def trace_cf(self) -> float:
        return float(np.sum(self.covariance.matrix * self.f_matrix))


def _options(opts: Optional[SolverOptions], kw) -> SolverOptions:
    opts = opts or SolverOptions()
    return replace(opts, **kw) if kw else opts


def _iterate(update, C0: Matrix, opts: SolverOptions):
    C = np.array(C0, dtype=float)
    alpha = opts.damping
    halvings = 0
    streak = 0
    prev = np.inf
    res = np.inf
    for it in range(1, opts.max_iter + 1):
        T = update(C)
        res = np.linalg.norm(T - C)
        if res <= opts.tol * np.linalg.norm(C):
            # the undamped image is usually closer to the fixed point
            T = 0.5 * (T + T.T)
            res_t = np.linalg.norm(update(T) - T)
            return (T, res_t, it) if res_t <= res else (C, res, it)
        # stagnation counts as failure: a damped eigenvalue near -1 oscillates at constant residual
        if res > STALL_RATIO * prev:
            streak = 0
            if halvings < opts.max_halvings:
                alpha *= 0.5
                halvings += 1
        else:
            streak += 1
            if streak >= RESTORE_AFTER:
                alpha = opts.damping
                halvings = 0
        prev = res
        C = (1.0 - alpha) * C + alpha * T
        C = 0.5 * (C + C.T)
    raise ConvergenceError(
        f"no convergence after {opts.max_iter} iterations (residual {res:.3e})",
        residual=res, covariance=C, iterations=opts.max_iter,
    )


def _symplectic_inverse(sigma: Matrix) -> Matrix:
    omega = standard_form(sigma.shape[0] // 2)
    return -omega @ sigma.T @ omega


def _n_diag(qn: QuantumNumbers, hbar: float) -> Matrix:
    return hbar * (np.repeat(np.asarray(qn.n, dtype=float), 2) + 0.5)


def _williamson_of_f(f, C):
    F = f_matrix(f, C)
    try:
        return F, williamson(F)
    except DefinitenessError as exc:
        raise DefinitenessError(f"F matrix lost positive definiteness: {exc}", matrix=np.array(C)) from exc


def _init(f: UncertaintyFunctional, qn: QuantumNumbers, init) -> Matrix:
    if init is None:
        return number_state_covariance(f.space, qn).matrix
    C0 = _raw(init)
    if C0.shape != (f.space.dim, f.space.dim):
        raise DimensionError(f"initial covariance has shape {C0.shape}, expected {(f.space.dim,) * 2}")
    return C0


def solve_consistency(f: UncertaintyFunctional, qn=None, init=None,
                      opts: Optional[SolverOptions] = None, **kw) -> ExtremumResult:
    """Damped fixed-point iteration of ``C -> sigma(F(C))^{-1} N sigma(F(C))^{-T}``.

    Raises:
        DefinitenessError: F lost positive definiteness; ``matrix`` holds the offending C.
        ConvergenceError: no fixed point within ``max_iter`` iterations.
    """
    opts = _options(opts, kw)
    qn = QuantumNumbers.ground(f.space.n_modes) if qn is None else _as_qn(qn)
    if len(qn) != f.space.n_modes:
        raise DimensionError(f"{len(qn)} quantum numbers for {f.space.n_modes} modes")
    n_diag = _n_diag(qn, f.space.hbar)

    def update(C):
        _, w = _williamson_of_f(f, C)
        S_inv = _symplectic_inverse(w.sigma)
        return (S_inv * n_diag) @ S_inv.T

    C, res, it = _iterate(update, _init(f, qn, init), opts)
    F, w = _williamson_of_f(f, C)
    gap = abs(np.sum(C * F) - np.sum(np.repeat(w.sympl_eigs, 2) * n_diag))
    return ExtremumResult(
        covariance=CovarianceMatrix(f.space, C), value=f(C), qn=qn, residual=float(res),
        iterations=it, f_matrix=F, sympl_eigs=w.sympl_eigs, trace_gap=float(gap),
    )


def _single_mode_target(F: Matrix, n: int, hbar: float, C=None) -> tuple:
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    if not (det > 0 and F[0, 0] > 0):
        raise DefinitenessError("single-mode F matrix is not positive definite", matrix=C)
    root = np.sqrt(det)
    inv = np.array([[F[1, 1], -F[0, 1]], [-F[1, 0], F[0, 0]]]) / det
    return hbar * (n + 0.5) * root * inv, root


def solve_consistency_n1(f: UncertaintyFunctional, n: int = 0, init=None,
                         opts: Optional[SolverOptions] = None, **kw) -> ExtremumResult:
    """One-mode extremum from ``F C / sqrt(det F) = hbar (n + 1/2) I``."""
    if f.space.n_modes != 1:
        raise DimensionError("solve_consistency_n1 needs a single-mode functional")
    opts = _options(opts, kw)
    qn = QuantumNumbers((n,))
    hbar = f.space.hbar

    def update(C):
        return _single_mode_target(f_matrix(f, C), n, hbar, C)[0]

    C, res, it = _iterate(update, _init(f, qn, init), opts)
    F = f_matrix(f, C)
    _, root = _single_mode_target(F, n, hbar, C)
    gap = abs(np.sum(C * F) - 2 * root * hbar * (n + 0.5))
    return ExtremumResult(
        covariance=CovarianceMatrix(f.space, C), value=f(C), qn=qn, residual=float(res),
        iterations=it, f_matrix=F, sympl_eigs=np.array([root]), trace_gap=float(gap),
    )


def solve_consistency_product(f: Union[UncertaintyFunctional, Sequence[UncertaintyFunctional]], qn=None,
                              init=None, opts: Optional[SolverOptions] = None, **kw) -> ExtremumResult:
    """Extremum over product states: ``F_pr C = N`` with ``F_pr = diag(F_k / sqrt(det F_k))``.

    ``f`` is either one functional of all modes (only its values on
    block-diagonal covariances matter) or a list of single-mode functionals
    that are summed.
    """
    if not isinstance(f, UncertaintyFunctional):
        f = separable_sum(f)
    opts = _options(opts, kw)
    n_modes = f.space.n_modes
    qn = QuantumNumbers.ground(n_modes) if qn is None else _as_qn(qn)
    if len(qn) != n_modes:
        raise DimensionError(f"{len(qn)} quantum numbers for {n_modes} modes")
    hbar = f.space.hbar
    blocks = [slice(2 * k, 2 * k + 2) for k in range(n_modes)]

    def update(C):
        F = f_matrix(f, C)
        T = np.zeros_like(C)
        for k, b in enumerate(blocks):
            T[b, b] = _single_mode_target(F[b, b], qn.n[k], hbar, C)[0]
        return T

    C0 = _init(f, qn, init)
    mask = np.kron(np.eye(n_modes), np.ones((2, 2)))
    C, res, it = _iterate(update, C0 * mask, opts)
    F = f_matrix(f, C)
    roots = np.array([_single_mode_target(F[b, b], qn.n[k], hbar, C)[1] for k, b in enumerate(blocks)])
    F_local = F * mask
    gap = abs(np.sum(C * F_local) - 2 * hbar * np.sum(roots * (np.asarray(qn.n) + 0.5)))
    return ExtremumResult(
        covariance=CovarianceMatrix(f.space, C), value=f(C), qn=qn, residual=float(res),
        iterations=it, f_matrix=F_local, sympl_eigs=roots, trace_gap=float(gap),
    )


def minimize(f: UncertaintyFunctional, verify_minimality: bool = False,
             opts: Optional[SolverOptions] = None, **kw) -> ExtremumResult:
    """Extremum for the ground-state quantum numbers ``(0, ..., 0)``.

    With ``verify_minimality`` every single excitation ``n_k = 1`` is solved too;
    ``minimal`` records whether all of those values are at least as large.
    """
    res = solve_consistency(f, opts=opts, **kw)
    if not verify_minimality:
        return res
    excited = {}
    for k in range(f.space.n_modes):
        qn = [0] * f.space.n_modes
        qn[k] = 1
        excited[tuple(qn)] = solve_consistency(f, qn=qn, opts=opts, **kw).value
    slack = 1e-9 * max(1.0, abs(res.value))
    minimal = all(v >= res.value - slack for v in excited.values())
    if not minimal:
        log.warning("%s: an excited extremum lies below the ground-state value", f.label)
    return replace(res, excited_values=excited, minimal=minimal)


# -- brute-force oracle ----------------------------------------------------------------


def _n_params(n_modes: int, product: bool) -> int:
    if product:
        return 2 * n_modes
    return 3 * n_modes + n_modes * (n_modes - 1)


def pure_gaussian_covariance(params, n_modes: int, hbar: float = 1.0, product: bool = False) -> Matrix:
    """Pure Gaussian covariance ``(hbar/2) Sigma Sigma^T`` from a parameter vector.

    ``Sigma`` is a product of single-mode squeezers ``r_k`` and rotations
    ``theta_k``; unless ``product`` it is followed by a beam splitter
    ``(tau_ij, phi_ij)`` on every mode pair and a final layer of rotations.
    """
    params = np.asarray(params, dtype=float)
    r, theta = params[:n_modes], params[n_modes:2 * n_modes]
    c, s = np.cos(theta), np.sin(theta)
    e2m, e2p = np.exp(-2 * r), np.exp(2 * r)
    # R(theta) diag(e^-2r, e^2r) R(theta)^T per mode
    L = np.zeros((2 * n_modes, 2 * n_modes))
    L[0::2, 0::2] = np.diag(c * c * e2m + s * s * e2p)
    L[1::2, 1::2] = np.diag(s * s * e2m + c * c * e2p)
    off = np.diag(c * s * (e2p - e2m))
    L[0::2, 1::2] = off
    L[1::2, 0::2] = off
    if not product:
        U = np.diag(np.exp(1j * params[-n_modes:]))
        k = 2 * n_modes
        for i in range(n_modes):
            for j in range(i + 1, n_modes):
                tau, phi = params[k], params[k + 1]
                k += 2
                B = np.eye(n_modes, dtype=complex)
                B[i, i] = B[j, j] = np.cos(tau)
                B[i, j] = -np.exp(-1j * phi) * np.sin(tau)
                B[j, i] = np.exp(1j * phi) * np.sin(tau)
                U = U @ B
        P = passive(U)
        L = P @ L @ P.T
    return 0.5 * hbar * L


#: squeezing parameters are confined to |r| <= MAX_SQUEEZE so that roundoff stays bounded
MAX_SQUEEZE = 3.0


def _objective(f, n_modes, hbar, product):
    def objective(x):
        with np.errstate(all="ignore"):
            try:
                val = f.evaluate(pure_gaussian_covariance(x, n_modes, hbar, product))
            except np.linalg.LinAlgError:
                return np.inf
        return val if np.isfinite(val) else np.inf
    return objective


def _local_search(objective, x0, n_modes, xtol, ftol, maxfev):
    bounds = [(-MAX_SQUEEZE, MAX_SQUEEZE)] * n_modes + [(None, None)] * (len(x0) - n_modes)
    with np.errstate(all="ignore"):
        out = _scipy_minimize(objective, x0, method="Powell", bounds=bounds,
                              options={"xtol": xtol, "ftol": ftol, "maxfev": maxfev})
    return float(out.fun), out.x


def _restart(objective, n_modes, product, seed_seq, maxfev):
    rng = np.random.default_rng(seed_seq)
    x0 = rng.uniform(-np.pi, np.pi, size=_n_params(n_modes, product))
    x0[:n_modes] = rng.uniform(-1.0, 1.0, size=n_modes)
    return _local_search(objective, x0, n_modes, 1e-4, 1e-9, maxfev)


def brute_force_minimize(f: UncertaintyFunctional, restarts: int = 50, seed: int = 0,
                         product: bool = False, workers: Optional[int] = None,
                         maxfev: int = 20000, polish: int = 3) -> tuple:
    """Minimise ``f`` over pure Gaussian covariances from random restarts.

    Each restart draws random squeezing/rotation/mixer parameters from its own
    child seed and runs a coarse Powell direction-set search; the ``polish``
    best candidates are then refined to tight tolerance. Results do not depend
    on ``workers``. ``product=True`` restricts the search to product states.

    Returns:
        tuple: ``(best value, CovarianceMatrix)``.
    """
    n_modes, hbar = f.space.n_modes, f.space.hbar
    objective = _objective(f, n_modes, hbar, product)
    seeds = np.random.SeedSequence(seed).spawn(restarts)

    def run(ss):
        return _restart(objective, n_modes, product, ss, maxfev)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            coarse = list(pool.map(run, seeds))
    else:
        coarse = [run(ss) for ss in seeds]
    order = sorted(range(restarts), key=lambda i: coarse[i][0])[:max(polish, 1)]
    fine = [_local_search(objective, coarse[i][1], n_modes, 1e-9, 1e-15, maxfev) for i in order]
    value, x = min(fine + [coarse[order[0]]], key=lambda r: r[0])
    C = pure_gaussian_covariance(x, n_modes, hbar, product)
    return value, CovarianceMatrix(f.space, C)
