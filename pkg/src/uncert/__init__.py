"""Uncertainty relations for second moments of continuous-variable quantum states."""

from __future__ import annotations

from .covariance import (
    CovarianceMatrix,
    MomentTriple,
    QuantumNumbers,
    covariance_from_triple,
    is_admissible,
    is_pure_gaussian,
    number_state_covariance,
    on_boundary,
    product_covariance,
    squeezed_number_triple,
    superposition_0M_variance,
    superposition_0M_variance_exact,
    triple_from_covariance,
    two_mode_squeezed_covariance,
)
from .errors import (
    ConstraintError,
    ConvergenceError,
    DefinitenessError,
    DegenerateError,
    DimensionError,
    DomainError,
    InadmissibleError,
    ShapeError,
    UncertaintyError,
)
from .functional import (
    ExtremumResult,
    SolverOptions,
    UncertaintyFunctional,
    brute_force_minimize,
    determinant,
    f_matrix,
    linear,
    minimize,
    pure_gaussian_covariance,
    solve_consistency,
    solve_consistency_n1,
    solve_consistency_product,
    variance_sum,
)
from .inequalities import (
    EPROperatorSet,
    InequalitySpec,
    Verdict,
    catalog,
    detect_entanglement,
    epr_from_abc,
    epr_variance,
    evaluate,
)
from .region import (
    ConvexDecomposition,
    HoleWitness,
    HyperboloidSheet,
    convex_decompose,
    convexity_check,
    hole_witness,
    region_contains,
    sheet_of,
)
from .symplectic import (
    PhaseSpace,
    WilliamsonResult,
    is_symplectic,
    standard_form,
    symplectic_eigenvalues,
    williamson,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
