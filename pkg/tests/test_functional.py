from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uncert import inequalities as ineq
from uncert.covariance import CovarianceMatrix, is_pure_gaussian
from uncert.errors import ConvergenceError, DefinitenessError, DimensionError
from uncert.functional import (
    SolverOptions,
    UncertaintyFunctional,
    brute_force_minimize,
    determinant,
    f_matrix,
    finite_difference_partials,
    linear,
    minimize,
    pure_gaussian_covariance,
    separable_sum,
    solve_consistency,
    solve_consistency_n1,
    solve_consistency_product,
    variance_sum,
)
from uncert.symplectic import PhaseSpace, symplectic_eigenvalues

from conftest import random_admissible


def det1(space):
    return UncertaintyFunctional(space, lambda C: C[0, 0] * C[1, 1] - C[0, 1] ** 2, label="xy - w^2")


def sum1(space):
    return linear(space, np.eye(2), "x + y")


# -- F matrix --------------------------------------------------------------------------


def test_f_matrix_of_variance_sum_is_identity(rng):
    sp = PhaseSpace(1)
    for _ in range(5):
        C = random_admissible(rng, 1)
        assert np.allclose(f_matrix(sum1(sp), C), np.eye(2))


def test_f_matrix_of_single_mode_determinant():
    F = f_matrix(det1(PhaseSpace(1)), np.eye(2))
    assert np.allclose(F, np.eye(2), atol=1e-8)
    C = np.array([[2.0, 0.3], [0.3, 1.0]])
    # f_x = y, f_y = x, f_w = -2w, and F keeps half of f_w off the diagonal
    assert np.allclose(F := f_matrix(det1(PhaseSpace(1)), C), [[1.0, -0.3], [-0.3, 2.0]], atol=1e-8)
    assert np.allclose(F, np.linalg.det(C) * np.linalg.inv(C), atol=1e-8)


def test_f_matrix_of_linear_functional_is_its_weights():
    W = ineq.corineq_weights(2, 1, 1)
    F = f_matrix(linear(PhaseSpace(2), W), np.eye(4))
    assert np.array_equal(F, W)
    assert np.array_equal(F, [[2, 0, 0.5, 0], [0, 2, 0, -0.5], [0.5, 0, 1, 0], [0, -0.5, 0, 1]])


@pytest.mark.parametrize("n", [2, 3])
def test_f_matrix_of_determinant(rng, n):
    C = random_admissible(rng, n)
    F = f_matrix(determinant(PhaseSpace(n)), C)
    assert np.allclose(F, np.linalg.det(C) * np.linalg.inv(C), rtol=1e-12)


def test_trace_cf_is_first_order_change(rng):
    """Tr(dC F) matches f(C + dC) - f(C) to first order for every catalog entry."""
    for n in (1, 2, 3):
        for spec in ineq.catalog(PhaseSpace(n)):
            C = random_admissible(rng, n)
            dC = rng.normal(size=C.shape)
            dC = 1e-6 * (dC + dC.T)
            F = f_matrix(spec.functional, C)
            lhs = spec.functional(C + dC) - spec.functional(C - dC)
            assert np.isclose(lhs, 2 * np.sum(dC * F), rtol=1e-5, atol=1e-14), spec.label


@pytest.mark.parametrize("n", [1, 2, 3])
def test_analytic_gradients_match_finite_differences(rng, n):
    for spec in ineq.catalog(PhaseSpace(n)):
        f = spec.functional
        for _ in range(100 if n < 3 else 20):
            C = random_admissible(rng, n)
            P = f.partials(C)
            fd = finite_difference_partials(f.evaluate, C)
            scale = max(np.max(np.abs(P)), 1e-12)
            assert np.max(np.abs(P - fd)) <= 1e-5 * scale, spec.label


def test_finite_difference_fallback(rng):
    sp = PhaseSpace(2)
    ev = determinant(sp).evaluate
    f = UncertaintyFunctional(sp, ev, label="det, numeric")
    C = random_admissible(rng, 2)
    assert np.allclose(f.partials(C), determinant(sp).partials(C), rtol=1e-6)


# -- single-mode closed form ----------------------------------------------------------


def test_n1_sum_ground_state(hbar):
    sp = PhaseSpace(1, hbar)
    r = solve_consistency_n1(sum1(sp), 0)
    assert np.allclose(r.covariance.matrix, 0.5 * hbar * np.eye(2))
    assert np.isclose(r.value, hbar)


def test_n1_sum_first_excited(hbar):
    r = solve_consistency_n1(sum1(PhaseSpace(1, hbar)), 1)
    assert np.allclose(r.covariance.matrix, 1.5 * hbar * np.eye(2))
    assert np.isclose(r.value, 3 * hbar)


def test_n1_determinant_returns_boundary_point(hbar):
    sp = PhaseSpace(1, hbar)
    x = 0.5 * hbar * math.e
    init = np.array([[x, 0.1 * hbar], [0.1 * hbar, (0.26 * hbar ** 2) / x]])
    r = solve_consistency_n1(det1(sp), 0, init=init)
    assert r.residual <= 1e-9 * np.linalg.norm(r.covariance.matrix)
    assert np.isclose(np.linalg.det(r.covariance.matrix), hbar ** 2 / 4, rtol=1e-9)
    F = r.f_matrix
    assert np.allclose(F @ r.covariance.matrix / math.sqrt(np.linalg.det(F)), 0.5 * hbar * np.eye(2), atol=1e-8)


def test_n1_requires_single_mode():
    with pytest.raises(DimensionError):
        solve_consistency_n1(determinant(PhaseSpace(2)))


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(-0.9, 0.9), st.integers(0, 3))
def test_n1_general_quadratic_form(a, b, cf, n):
    """x f_x = y f_y style conditions: for f = Tr(CW) the extremum is hbar(n+1/2) sqrt(det W) W^-1."""
    c = cf * math.sqrt(a * b)
    W = np.array([[a, c], [c, b]])
    r = solve_consistency_n1(linear(PhaseSpace(1), W), n)
    assert np.allclose(r.covariance.matrix, (n + 0.5) * math.sqrt(np.linalg.det(W)) * np.linalg.inv(W), rtol=1e-9)
    assert np.isclose(r.value, (2 * n + 1) * math.sqrt(a * b - c * c), rtol=1e-9)


# -- general solver --------------------------------------------------------------------


def test_general_solver_single_mode_sum(hbar):
    r = solve_consistency(sum1(PhaseSpace(1, hbar)))
    assert np.allclose(r.covariance.matrix, 0.5 * hbar * np.eye(2))
    assert np.isclose(r.value, hbar)


def corineq_extremum(a, b, c, n1, n2, hbar):
    root = math.sqrt((a + b) ** 2 - c * c)
    common = (a + b) * (n1 + n2 + 1) * hbar / (2 * root)
    v1 = (n1 - n2) * hbar / 2 + common
    v2 = (n2 - n1) * hbar / 2 + common
    k = c * (n1 + n2 + 1) * hbar / (2 * root)
    C = np.diag([v1, v1, v2, v2])
    C[0, 2] = C[2, 0] = -k
    C[1, 3] = C[3, 1] = k
    value = (a - b) * (n1 - n2) * hbar + root * (n1 + n2 + 1) * hbar
    return C, value


def test_corineq_ground_state_fixture():
    r = minimize(ineq.corineq(PhaseSpace(2), 2, 1, 1).functional)
    # frozen: 3/(4 sqrt 2), 1/(4 sqrt 2), 2 sqrt 2
    assert np.allclose(np.diag(r.covariance.matrix), 0.5303300858899106, rtol=1e-12)
    assert np.isclose(r.covariance.cross(0, 2), -0.17677669529663687, rtol=1e-12)
    assert np.isclose(r.covariance.cross(1, 3), 0.17677669529663687, rtol=1e-12)
    assert np.isclose(r.value, 2.8284271247461903, rtol=1e-13)
    assert is_pure_gaussian(r.covariance)


@pytest.mark.parametrize("qn", [(0, 0), (1, 0), (0, 1), (2, 1), (1, 3)])
def test_corineq_excited_states(qn, hbar):
    a, b, c = 2.0, 1.0, 1.0
    r = solve_consistency(ineq.corineq(PhaseSpace(2, hbar), a, b, c).functional, qn=qn)
    C, value = corineq_extremum(a, b, c, *qn, hbar)
    assert np.allclose(r.covariance.matrix, C, rtol=1e-8, atol=1e-12)
    assert np.isclose(r.value, value, rtol=1e-10)


def test_minimality_scan():
    r = minimize(ineq.corineq(PhaseSpace(2), 2, 1, 1).functional, verify_minimality=True)
    assert r.minimal
    root8 = math.sqrt(8)
    assert np.isclose(r.excited_values[(1, 0)], 1 + 2 * root8)
    assert np.isclose(r.excited_values[(0, 1)], -1 + 2 * root8)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_determinant_minimum(n, hbar):
    r = minimize(determinant(PhaseSpace(n, hbar)))
    assert np.isclose(r.value, (hbar / 2) ** (2 * n), rtol=1e-10)


def test_result_invariants(hbar):
    for spec in ineq.catalog(PhaseSpace(2, hbar)):
        if not spec.global_attained:
            continue
        r = minimize(spec.functional)
        assert r.residual <= 1e-9 * np.linalg.norm(r.covariance.matrix)
        assert r.trace_gap <= 1e-8 * abs(r.trace_cf)
        assert np.isclose(r.value, spec.functional(r.covariance))
        assert np.allclose(np.sort(r.sympl_eigs)[::-1], symplectic_eigenvalues(r.f_matrix))


def test_singular_f_raises_definiteness_error():
    spec = ineq.duan(PhaseSpace(2))
    with pytest.raises(DefinitenessError) as err:
        minimize(spec.functional)
    assert err.value.matrix is not None and err.value.matrix.shape == (4, 4)


def test_convergence_error_carries_state():
    f = ineq.corineq(PhaseSpace(2), 2, 1, 1).functional
    with pytest.raises(ConvergenceError) as err:
        solve_consistency(f, max_iter=3)
    assert err.value.iterations == 3
    assert err.value.residual > 0
    assert err.value.covariance.shape == (4, 4)


def test_options_object_and_keywords_agree():
    f = ineq.corineq(PhaseSpace(2), 1, 1, 1).functional
    a = solve_consistency(f, opts=SolverOptions(tol=1e-12))
    b = solve_consistency(f, tol=1e-12)
    assert np.array_equal(a.covariance.matrix, b.covariance.matrix)


def test_qn_length_mismatch():
    with pytest.raises(DimensionError):
        solve_consistency(determinant(PhaseSpace(2)), qn=(0,))


@given(st.floats(0.1, 10.0))
def test_positive_scaling_leaves_argmin(alpha):
    f = ineq.corineq(PhaseSpace(2), 2, 1, 1).functional
    base = minimize(f)
    scaled = minimize(f.scaled(alpha))
    assert np.isclose(scaled.value, alpha * base.value, rtol=1e-9)
    assert np.allclose(scaled.covariance.matrix, base.covariance.matrix, rtol=1e-8, atol=1e-12)


# -- product solver --------------------------------------------------------------------


def test_product_solver_prodrs(hbar):
    spec = ineq.prodrs(PhaseSpace(2, hbar))
    r = solve_consistency_product(spec.functional)
    assert np.isclose(r.value, (hbar / 2) ** 4, rtol=1e-10)
    assert abs(r.covariance.covariance_pq(0)) < 1e-12 and abs(r.covariance.covariance_pq(1)) < 1e-12


def test_product_solver_triplesep(hbar):
    r = solve_consistency_product(ineq.triplesep(PhaseSpace(3, hbar)).functional)
    assert np.isclose(r.value, 3 * math.sqrt(2) * hbar, rtol=1e-10)


@pytest.mark.parametrize("a, b", [(1, 1), (2, 1), (1, 4)])
def test_product_solver_mixed_linear_case(a, b, hbar):
    spec = ineq.mixedprod(PhaseSpace(2, hbar), a, b, 1)
    r = solve_consistency_product(spec.functional)
    assert np.isclose(r.value, 2 * math.sqrt(a * b) * (hbar / 2) ** 2, rtol=1e-10)


def test_product_solver_scalar_conditions(hbar):
    """Per mode: x f_x = y f_y, 2 w f_y = -x f_w and xy - w^2 = hbar^2 (n + 1/2)^2."""
    sp = PhaseSpace(2, hbar)
    W = np.array([[2.0, 0.6, 0.3, 0.0], [0.6, 1.0, 0.0, -0.2], [0.3, 0.0, 1.5, -0.4], [0.0, -0.2, -0.4, 3.0]])
    f = linear(sp, W)
    qn = (1, 2)
    r = solve_consistency_product(f, qn=qn)
    P = f.partials(r.covariance)
    for k, n in enumerate(qn):
        x, y, w = r.covariance.variance_p(k), r.covariance.variance_q(k), r.covariance.covariance_pq(k)
        fx, fy, fw = P[2 * k, 2 * k], P[2 * k + 1, 2 * k + 1], P[2 * k, 2 * k + 1]
        assert np.isclose(x * fx, y * fy, rtol=1e-9)
        assert np.isclose(2 * w * fy, -x * fw, rtol=1e-8, atol=1e-12)
        assert np.isclose(x * y - w * w, (hbar * (n + 0.5)) ** 2, rtol=1e-9)


def test_product_solver_accepts_list(hbar):
    sp1 = PhaseSpace(1, hbar)
    r = solve_consistency_product([sum1(sp1), det1(sp1)])
    assert np.isclose(r.value, hbar + hbar ** 2 / 4, rtol=1e-9)
    with pytest.raises(DimensionError):
        separable_sum([determinant(PhaseSpace(2))])


def test_separable_functional_solvers_agree(hbar):
    sp = PhaseSpace(2, hbar)
    for spec in (ineq.sumheis(sp), ineq.prodheis(sp), ineq.robdof(sp), ineq.prodrs(sp)):
        assert np.isclose(minimize(spec.functional).value, solve_consistency_product(spec.functional).value,
                          rtol=1e-8)
    f = variance_sum(sp, np.diag([1.0, 2.0, 0.5, 3.0]))
    assert np.isclose(minimize(f).value, solve_consistency_product(f).value, rtol=1e-8)


# -- oracle -------------------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("product", [False, True])
def test_parameterised_covariances_are_pure(rng, n, product):
    from uncert.functional import _n_params

    for _ in range(10):
        x = rng.uniform(-2, 2, _n_params(n, product))
        C = CovarianceMatrix.from_array(pure_gaussian_covariance(x, n, 0.8, product), 0.8)
        assert is_pure_gaussian(C)
        if product:
            assert np.allclose(C.matrix[0:2, 2:], 0)


def test_oracle_single_mode_sum(hbar):
    value, C = brute_force_minimize(sum1(PhaseSpace(1, hbar)), restarts=10, seed=3)
    assert abs(value - hbar) <= 1e-4 * hbar
    assert value >= hbar - 1e-12


def test_oracle_corineq():
    value, _ = brute_force_minimize(ineq.corineq(PhaseSpace(2), 1, 1, 1).functional, restarts=20, seed=7)
    assert -1e-9 <= value - math.sqrt(3) <= 1e-4


def test_oracle_is_deterministic_and_worker_independent():
    f = ineq.corineq(PhaseSpace(2), 2, 1, 1).functional
    a = brute_force_minimize(f, restarts=6, seed=11)
    b = brute_force_minimize(f, restarts=6, seed=11)
    c = brute_force_minimize(f, restarts=6, seed=11, workers=3)
    assert a[0] == b[0] == c[0]
    assert np.array_equal(a[1].matrix, c[1].matrix)


def test_oracle_never_undercuts_on_random_states(rng):
    """Every sampled admissible covariance lies above the analytic minimum."""
    for n in (1, 2, 3):
        for spec in ineq.catalog(PhaseSpace(n)):
            for _ in range(30):
                C = random_admissible(rng, n)
                assert spec.functional(C) >= spec.bound - 1e-9 * spec.scale, spec.label
