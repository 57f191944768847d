"""Named uncertainty inequalities, EPR-type operators and entanglement verdicts.

Each :class:`InequalitySpec` pairs a left-hand side (an
:class:`~uncert.functional.UncertaintyFunctional`) with the bound obeyed by all
states and, where one exists, the larger bound obeyed by separable states.
A covariance whose left-hand side falls below the separable bound is entangled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .covariance import CovarianceMatrix, is_admissible
from .errors import ConstraintError, DimensionError, DomainError, InadmissibleError
from .functional import (
    ExtremumResult,
    UncertaintyFunctional,
    determinant,
    linear,
    minimize,
    solve_consistency_product,
    variance_sum,
)
from .symplectic import PhaseSpace

#: default verdict tolerance, in units of the bound's power of hbar
VERDICT_TOL = 1e-9

# positions in z = (p1, q1, p2, q2, ...)
P1, Q1, P2, Q2 = 0, 1, 2, 3


@dataclass(frozen=True)
class InequalitySpec:
    """``lhs(C) >= bound`` for all states (and ``>= separable_bound`` for separable ones).

    ``hbar_power`` is the power of hbar carried by the bound, used to scale
    tolerances. ``global_attained`` is false when the global bound is only an
    infimum or the F matrix is singular, so no extremal state can be solved for.
    """

    label: str
    arity: int
    functional: UncertaintyFunctional
    bound: float
    hbar_power: int
    params: dict = field(default_factory=dict)
    separable_bound: Optional[float] = None
    global_attained: bool = True
    constraint: Callable[[dict], bool] = lambda p: True
    description: str = ""

    def __post_init__(self):
        if not self.constraint(self.params):
            raise ConstraintError(f"{self.label}: parameters {self.params} violate the constraints")
        if self.separable_bound is not None and self.bound > self.separable_bound * (1 + 1e-12):
            raise ConstraintError(f"{self.label}: global bound exceeds the separable bound")

    @property
    def hbar(self) -> float:
        return self.functional.space.hbar

    @property
    def scale(self) -> float:
        return self.hbar ** self.hbar_power

    def lhs(self, C) -> float:
        return self.functional(C)


@dataclass(frozen=True)
class Evaluation:
    lhs: float
    bound: float
    satisfied: bool
    margin: float


class Verdict(enum.Enum):
    ENTANGLED = "Entangled"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


# -- helpers for functionals of local moments ----------------------------------------


def _xyw(C, k):
    return C[2 * k, 2 * k], C[2 * k + 1, 2 * k + 1], C[2 * k, 2 * k + 1]


def _local_partials(n_modes, parts):
    """Partials array from ``{(k, 'x'|'y'|'w'): value}``."""
    P = np.zeros((2 * n_modes, 2 * n_modes))
    for (k, name), val in parts.items():
        if name == "x":
            P[2 * k, 2 * k] = val
        elif name == "y":
            P[2 * k + 1, 2 * k + 1] = val
        else:
            P[2 * k, 2 * k + 1] = P[2 * k + 1, 2 * k] = val
    return P


def _require_modes(space: PhaseSpace, n: int, label: str):
    if space.n_modes != n:
        raise DimensionError(f"{label} is defined for {n} modes, got {space.n_modes}")


def _positive(*names):
    return lambda p: all(p[k] > 0 for k in names)


# -- catalog entries ---------------------------------------------------------------------


def detrs(space: PhaseSpace) -> InequalitySpec:
    """``det C >= (hbar/2)^(2N)``."""
    n = space.n_modes
    return InequalitySpec(
        "detrs", n, determinant(space), (space.hbar / 2) ** (2 * n), 2 * n,
        description="det C >= (hbar/2)^(2N)",
    )


def robdof(space: PhaseSpace) -> InequalitySpec:
    """Product of the two single-mode Robertson-Schroedinger determinants."""
    _require_modes(space, 2, "robdof")

    def ev(C):
        x1, y1, w1 = _xyw(C, 0)
        x2, y2, w2 = _xyw(C, 1)
        return (x1 * y1 - w1 ** 2) * (x2 * y2 - w2 ** 2)

    def grad(C):
        x1, y1, w1 = _xyw(C, 0)
        x2, y2, w2 = _xyw(C, 1)
        d1, d2 = x1 * y1 - w1 ** 2, x2 * y2 - w2 ** 2
        return _local_partials(2, {
            (0, "x"): y1 * d2, (0, "y"): x1 * d2, (0, "w"): -2 * w1 * d2,
            (1, "x"): y2 * d1, (1, "y"): x2 * d1, (1, "w"): -2 * w2 * d1,
        })

    f = UncertaintyFunctional(space, ev, grad, "(x1 y1 - w1^2)(x2 y2 - w2^2)")
    return InequalitySpec("robdof", 2, f, (space.hbar / 2) ** 4, 4,
                          description="(x1 y1 - w1^2)(x2 y2 - w2^2) >= (hbar/2)^4")


def prodrs(space: PhaseSpace) -> InequalitySpec:
    """``x1 y1 x2 y2 - w1^2 w2^2 >= (hbar/2)^4``."""
    _require_modes(space, 2, "prodrs")

    def ev(C):
        x1, y1, w1 = _xyw(C, 0)
        x2, y2, w2 = _xyw(C, 1)
        return x1 * y1 * x2 * y2 - w1 ** 2 * w2 ** 2

    def grad(C):
        x1, y1, w1 = _xyw(C, 0)
        x2, y2, w2 = _xyw(C, 1)
        return _local_partials(2, {
            (0, "x"): y1 * x2 * y2, (0, "y"): x1 * x2 * y2, (0, "w"): -2 * w1 * w2 ** 2,
            (1, "x"): x1 * y1 * y2, (1, "y"): x1 * y1 * x2, (1, "w"): -2 * w2 * w1 ** 2,
        })

    f = UncertaintyFunctional(space, ev, grad, "x1 y1 x2 y2 - w1^2 w2^2")
    return InequalitySpec("prodrs", 2, f, (space.hbar / 2) ** 4, 4,
                          description="x1 y1 x2 y2 >= (hbar/2)^4 + w1^2 w2^2")


def prodheis(space: PhaseSpace) -> InequalitySpec:
    """``dp1 dq1 dp2 dq2 >= (hbar/2)^2``."""
    _require_modes(space, 2, "prodheis")

    def ev(C):
        return np.sqrt(C[P1, P1] * C[Q1, Q1] * C[P2, P2] * C[Q2, Q2])

    def grad(C):
        f = ev(C)
        return np.diag(0.5 * f / np.diag(C))

    f = UncertaintyFunctional(space, ev, grad, "dp1 dq1 dp2 dq2")
    return InequalitySpec("prodheis", 2, f, (space.hbar / 2) ** 2, 2,
                          description="dp1 dq1 dp2 dq2 >= (hbar/2)^2")


def mixedprod(space: PhaseSpace, a: float = 1.0, b: float = 1.0, n: float = 1) -> InequalitySpec:
    """``a (x1 y2)^n + b (x2 y1)^n >= 2 sqrt(ab) (hbar/2)^(2n)``."""
    _require_modes(space, 2, "mixedprod")

    def ev(C):
        return a * (C[P1, P1] * C[Q2, Q2]) ** n + b * (C[P2, P2] * C[Q1, Q1]) ** n

    def grad(C):
        x1, y1, x2, y2 = C[P1, P1], C[Q1, Q1], C[P2, P2], C[Q2, Q2]
        g1 = a * n * (x1 * y2) ** (n - 1)
        g2 = b * n * (x2 * y1) ** (n - 1)
        return np.diag([g1 * y2, g2 * x2, g2 * y1, g1 * x1])

    f = UncertaintyFunctional(space, ev, grad, f"{a:g}(x1 y2)^{n:g} + {b:g}(x2 y1)^{n:g}")
    bound = 2 * np.sqrt(a * b) * (space.hbar / 2) ** (2 * n)
    return InequalitySpec("mixedprod", 2, f, bound, 2 * n, dict(a=a, b=b, n=n),
                          constraint=_positive("a", "b", "n"),
                          description="a (dp1^2 dq2^2)^n + b (dp2^2 dq1^2)^n >= 2 sqrt(ab) (hbar/2)^(2n)")


def corineq_weights(a: float, b: float, c: float):
    return np.array([
        [a, 0, c / 2, 0],
        [0, a, 0, -c / 2],
        [c / 2, 0, b, 0],
        [0, -c / 2, 0, b],
    ], dtype=float)


def corineq_bound(a: float, b: float, c: float, hbar: float = 1.0) -> float:
    return hbar * np.sqrt(max((a + b) ** 2 - c ** 2, 0.0))


def corineq(space: PhaseSpace, a: float = 1.0, b: float = 1.0, c: float = 1.0) -> InequalitySpec:
    """``a(x1 + y1) + b(x2 + y2) + c(C_p1p2 - C_q1q2) >= hbar sqrt((a+b)^2 - c^2)``, needs ``4ab > c^2``."""
    _require_modes(space, 2, "corineq")
    f = linear(space, corineq_weights(a, b, c), "a(x1+y1) + b(x2+y2) + c(Cp1p2 - Cq1q2)")
    return InequalitySpec(
        "corineq", 2, f, corineq_bound(a, b, c, space.hbar), 1, dict(a=a, b=b, c=c),
        separable_bound=(a + b) * space.hbar,
        constraint=lambda p: p["a"] > 0 and p["b"] > 0 and 4 * p["a"] * p["b"] > p["c"] ** 2,
        description="correlated sum; separable states obey >= (a+b) hbar",
    )


def corfour(space: PhaseSpace, a: float = 1.0, b: float = 1.0, c: float = 1.0) -> InequalitySpec:
    """Sum of the variances of the four EPR-type operators built by :func:`epr_from_abc`."""
    _require_modes(space, 2, "corfour")
    ops = epr_from_abc(a, b, c)
    f = variance_sum(space, ops.vectors(), "var u1 + var v1 + var u2 + var v2")
    attained = 4 * a * b > c ** 2 * (1 + 1e-12)
    return InequalitySpec(
        "corfour", 2, f, corineq_bound(a, b, c, space.hbar), 1, dict(a=a, b=b, c=c),
        separable_bound=(a + b) * space.hbar, global_attained=attained,
        constraint=lambda p: p["a"] > 0 and p["b"] > 0,
        description="four EPR-type variances; separable states obey >= (a+b) hbar",
    )


def duan(space: PhaseSpace, a: float = 1.0, b: float = 1.0) -> InequalitySpec:
    """``var(sqrt(a) p1 + sqrt(b) p2) + var(sqrt(a) q1 - sqrt(b) q2)``.

    All states obey ``>= hbar |a - b|``; separable states obey ``>= (a + b) hbar``.
    """
    _require_modes(space, 2, "duan")
    u = np.array([np.sqrt(a), 0, np.sqrt(b), 0])
    v = np.array([0, np.sqrt(a), 0, -np.sqrt(b)])
    f = variance_sum(space, [u, v], "var u + var v")
    return InequalitySpec(
        "duan", 2, f, abs(a - b) * space.hbar, 1, dict(a=a, b=b),
        separable_bound=(a + b) * space.hbar, global_attained=False,
        constraint=_positive("a", "b"),
        description="two-operator EPR criterion",
    )


TRIPLESEP_VECTORS = np.array([
    # u1 = q1 + p2 + q3, u2 = q2 + p3 + q1, u3 = q3 + p1 + q2
    [0, 1, 1, 0, 0, 1],
    [0, 1, 0, 1, 1, 0],
    [1, 0, 0, 1, 0, 1],
], dtype=float)


def triplesep(space: PhaseSpace) -> InequalitySpec:
    """Three commuting EPR-type operators; separable states obey ``>= 3 sqrt(2) hbar``."""
    _require_modes(space, 3, "triplesep")
    f = variance_sum(space, TRIPLESEP_VECTORS, "var u1 + var u2 + var u3")
    return InequalitySpec(
        "triplesep", 3, f, 0.0, 1, separable_bound=3 * np.sqrt(2) * space.hbar,
        global_attained=False, description="three-mode EPR sum; only bounded by zero in general",
    )


def _sqrt_pair_sum(space, pairs, label):
    def ev(C):
        return sum(np.sqrt(C[i, i] * C[j, j]) for i, j in pairs)

    def grad(C):
        g = np.zeros(C.shape[0])
        for i, j in pairs:
            r = np.sqrt(C[i, i] * C[j, j])
            g[i] += 0.5 * r / C[i, i]
            g[j] += 0.5 * r / C[j, j]
        return np.diag(g)

    return UncertaintyFunctional(space, ev, grad, label)


def sumheis(space: PhaseSpace) -> InequalitySpec:
    """``dp1 dq1 + dp2 dq2 >= hbar``."""
    _require_modes(space, 2, "sumheis")
    f = _sqrt_pair_sum(space, [(P1, Q1), (P2, Q2)], "dp1 dq1 + dp2 dq2")
    return InequalitySpec("sumheis", 2, f, space.hbar, 1, description="dp1 dq1 + dp2 dq2 >= hbar")


def crossheis(space: PhaseSpace) -> InequalitySpec:
    """``dp1 dq2 + dp2 dq1 >= hbar``."""
    _require_modes(space, 2, "crossheis")
    f = _sqrt_pair_sum(space, [(P1, Q2), (P2, Q1)], "dp1 dq2 + dp2 dq1")
    return InequalitySpec("crossheis", 2, f, space.hbar, 1, description="dp1 dq2 + dp2 dq1 >= hbar")


CONSTRUCTORS = {
    "detrs": detrs,
    "robdof": robdof,
    "prodrs": prodrs,
    "prodheis": prodheis,
    "mixedprod": mixedprod,
    "corineq": corineq,
    "corfour": corfour,
    "duan": duan,
    "triplesep": triplesep,
    "sumheis": sumheis,
    "crossheis": crossheis,
}

_ARITY = {"detrs": None, "triplesep": 3}


def catalog(space: PhaseSpace) -> list:
    """Every catalog inequality defined for ``space.n_modes``, at default parameters."""
    out = []
    for name, make in CONSTRUCTORS.items():
        arity = _ARITY.get(name, 2)
        if arity is None or arity == space.n_modes:
            out.append(make(space))
    return out


def extremize(spec: InequalitySpec, **kw) -> ExtremumResult:
    """Solve for the state attaining the global bound (requires ``global_attained``)."""
    if not spec.global_attained:
        raise DomainError(f"{spec.label}: the global bound is not attained by a solvable extremum")
    return minimize(spec.functional, **kw)


def separable_extremum(spec: InequalitySpec, **kw) -> ExtremumResult:
    """Minimum of the left-hand side over product states."""
    return solve_consistency_product(spec.functional, **kw)


def evaluate(spec: InequalitySpec, C: CovarianceMatrix, tol: float = VERDICT_TOL) -> Evaluation:
    if C.n_modes != spec.arity:
        raise DimensionError(f"{spec.label} acts on {spec.arity} modes, covariance has {C.n_modes}")
    lhs = spec.lhs(C)
    margin = lhs - spec.bound
    return Evaluation(lhs, spec.bound, margin >= -tol * spec.scale, margin)


def epr_variance(coeffs, C) -> float:
    """Variance ``a^T C a`` of the operator ``a^T z`` (zero first moments)."""
    a = np.asarray(coeffs, dtype=float)
    m = C.matrix if isinstance(C, CovarianceMatrix) else np.asarray(C, dtype=float)
    if a.shape != (m.shape[0],):
        raise DimensionError(f"coefficient vector of length {a.size} for a {m.shape[0]}-dim phase space")
    return float(a @ m @ a)


@dataclass(frozen=True)
class EPROperatorSet:
    """``u_i = alpha_i p1 + beta_i p2`` and ``v_i = gamma_i q1 - delta_i q2``, ``i = 1, 2``."""

    alpha: tuple
    beta: tuple
    gamma: tuple
    delta: tuple

    def vectors(self) -> np.ndarray:
        rows = []
        for i in range(2):
            rows.append([self.alpha[i], 0.0, self.beta[i], 0.0])
        for i in range(2):
            rows.append([0.0, self.gamma[i], 0.0, -self.delta[i]])
        return np.array(rows)

    def residuals(self, a: float, b: float, c: float) -> np.ndarray:
        al, be, ga, de = (np.asarray(t, dtype=float) for t in (self.alpha, self.beta, self.gamma, self.delta))
        return np.array([
            al @ al - a, ga @ ga - a,
            be @ be - b, de @ de - b,
            al @ be - c / 2, ga @ de - c / 2,
        ])


def epr_from_abc(a: float, b: float, c: float) -> EPROperatorSet:
    """One deterministic solution of the six constraints on the EPR coefficients.

    ``alpha = gamma = (sqrt(a), 0)``, ``beta = delta = (c / (2 sqrt(a)), sqrt(b - c^2/(4a)))``.
    """
    if not (a > 0 and b > 0):
        raise ConstraintError(f"a and b must be positive, got a={a}, b={b}")
    gap = 4 * a * b - c * c
    if gap < -1e-12 * 4 * a * b:
        raise ConstraintError(f"need 4ab >= c^2, got a={a}, b={b}, c={c}")
    sa = np.sqrt(a)
    b1 = c / (2 * sa)
    b2 = np.sqrt(max(gap, 0.0) / (4 * a))
    return EPROperatorSet((sa, 0.0), (b1, b2), (sa, 0.0), (b1, b2))


def detect_entanglement(C: CovarianceMatrix, spec: InequalitySpec, tol: float = VERDICT_TOL) -> Verdict:
    """Entangled iff ``lhs(C)`` is below the separable bound by more than ``tol`` (hbar units).

    The test is sufficient only: Inconclusive does not mean separable.

    Raises:
        InadmissibleError: ``C`` is not a physical covariance matrix.
        DomainError: ``spec`` has no separable bound.
    """
    if spec.separable_bound is None:
        raise DomainError(f"{spec.label} has no separable bound")
    if C.n_modes != spec.arity:
        raise DimensionError(f"{spec.label} acts on {spec.arity} modes, covariance has {C.n_modes}")
    if not is_admissible(C):
        raise InadmissibleError("covariance matrix is not admissible", matrix=C.matrix)
    if spec.lhs(C) < spec.separable_bound - tol * spec.scale:
        return Verdict.ENTANGLED
    return Verdict.INCONCLUSIVE
