from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uncert import inequalities as ineq
from uncert.covariance import CovarianceMatrix, number_state_covariance, two_mode_squeezed_covariance
from uncert.errors import ConstraintError, DefinitenessError, DimensionError, DomainError
from uncert.functional import brute_force_minimize
from uncert.inequalities import Verdict
from uncert.symplectic import PhaseSpace

from conftest import random_admissible, random_pure


def vacuum(n, hbar=1.0):
    return CovarianceMatrix(PhaseSpace(n, hbar), PhaseSpace(n, hbar).vacuum())


def test_catalog_contents():
    labels2 = {s.label for s in ineq.catalog(PhaseSpace(2))}
    assert len(labels2) >= 8
    assert {"detrs", "robdof", "prodrs", "prodheis", "mixedprod", "corineq", "corfour", "sumheis",
            "crossheis"} <= labels2
    assert {s.label for s in ineq.catalog(PhaseSpace(3))} == {"detrs", "triplesep"}
    assert {s.label for s in ineq.catalog(PhaseSpace(1))} == {"detrs"}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_catalog_bounds_hold_at_vacuum(n, hbar):
    for spec in ineq.catalog(PhaseSpace(n, hbar)):
        ev = ineq.evaluate(spec, vacuum(n, hbar))
        assert ev.satisfied, spec.label
        assert ev.margin == pytest.approx(ev.lhs - ev.bound)
        if spec.separable_bound is not None:
            assert spec.bound <= spec.separable_bound


def test_bounds_scale_with_hbar():
    for s1, s2 in zip(ineq.catalog(PhaseSpace(2, 1.0)), ineq.catalog(PhaseSpace(2, 3.0))):
        assert np.isclose(s2.bound, s1.bound * 3.0 ** s1.hbar_power)


def test_corineq_bound_fixtures(hbar):
    sp = PhaseSpace(2, hbar)
    assert ineq.corineq(sp, 1, 1, 0).bound == pytest.approx(2 * hbar)
    assert ineq.corineq(sp, 2, 1, 1).bound == pytest.approx(2 * math.sqrt(2) * hbar)
    near = ineq.corineq(sp, 1, 1, 2 - 1e-12).bound
    assert 0 < near < 1e-5 * hbar
    assert ineq.corineq(sp, 1, 1, 0).separable_bound == ineq.corineq(sp, 1, 1, 0).bound


def test_corineq_constraints():
    sp = PhaseSpace(2)
    with pytest.raises(ConstraintError):
        ineq.corineq(sp, 1, 1, 2)
    with pytest.raises(ConstraintError):
        ineq.corineq(sp, -1, 1, 0)
    with pytest.raises(ConstraintError):
        ineq.mixedprod(sp, 1, 0, 1)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-0.999, 0.999))
def test_monotone_window(a, b, cf):
    c = cf * 2 * math.sqrt(a * b)
    spec = ineq.corineq(PhaseSpace(2), a, b, c)
    assert spec.bound <= spec.separable_bound
    if abs(c) > 1e-6:
        assert spec.bound < spec.separable_bound


def test_arity_is_enforced():
    with pytest.raises(DimensionError):
        ineq.robdof(PhaseSpace(3))
    with pytest.raises(DimensionError):
        ineq.triplesep(PhaseSpace(2))
    with pytest.raises(DimensionError):
        ineq.evaluate(ineq.detrs(PhaseSpace(2)), vacuum(3))


def test_evaluate_fixtures(hbar):
    sp = PhaseSpace(2, hbar)
    ev = ineq.evaluate(ineq.robdof(sp), vacuum(2, hbar))
    assert ev.lhs == pytest.approx((hbar / 2) ** 4) and abs(ev.margin) < 1e-15
    ev = ineq.evaluate(ineq.detrs(sp), number_state_covariance(sp, (1, 0)))
    assert ev.lhs == pytest.approx(9 * hbar ** 4 / 16) and ev.margin == pytest.approx(hbar ** 4 / 2)


def test_corineq_extremum_saturates(hbar):
    spec = ineq.corineq(PhaseSpace(2, hbar), 2, 1, 1)
    r = ineq.extremize(spec)
    assert abs(ineq.evaluate(spec, r.covariance).margin) <= 1e-8 * hbar


def test_saturation_closure(hbar):
    """Entries with a solvable extremum are saturated there; others at their separable extremum."""
    for n in (1, 2, 3):
        for spec in ineq.catalog(PhaseSpace(n, hbar)):
            if spec.global_attained:
                r = ineq.extremize(spec)
                assert abs(ineq.evaluate(spec, r.covariance).margin) <= 1e-8 * spec.scale, spec.label
            if spec.separable_bound is not None:
                r = ineq.separable_extremum(spec)
                assert abs(spec.lhs(r.covariance) - spec.separable_bound) <= 1e-8 * spec.scale, spec.label


def test_extremize_rejects_unattained():
    with pytest.raises(DomainError):
        ineq.extremize(ineq.triplesep(PhaseSpace(3)))


def test_epr_variance(hbar, rng):
    sp = PhaseSpace(2, hbar)
    C = random_admissible(rng, 2, hbar)
    e = np.zeros(4)
    e[0] = 1.0
    assert ineq.epr_variance(e, C) == pytest.approx(C[0, 0])
    a = rng.normal(size=4)
    assert ineq.epr_variance(a, vacuum(2, hbar)) == pytest.approx(0.5 * hbar * a @ a)
    tmsv = two_mode_squeezed_covariance(0.5, hbar)
    assert ineq.epr_variance([0, 1, 0, -1], tmsv) == pytest.approx(hbar * math.exp(-1.0))
    with pytest.raises(DimensionError):
        ineq.epr_variance([1, 0], tmsv)
    del sp


@given(st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_epr_variance_bilinear(lam, seed):
    rng = np.random.default_rng(seed)
    C = random_admissible(rng, 2)
    a = rng.normal(size=4)
    v = ineq.epr_variance(a, C)
    assert v >= 0
    assert ineq.epr_variance(lam * a, C) == pytest.approx(lam * lam * v, rel=1e-12, abs=1e-12)


def test_epr_from_abc_fixtures():
    ops = ineq.epr_from_abc(1, 1, 2)
    vecs = ops.vectors()
    assert np.allclose(vecs[0], [1, 0, 1, 0]) and np.allclose(vecs[2], [0, 1, 0, -1])
    assert np.allclose(vecs[1], 0) and np.allclose(vecs[3], 0)
    ops = ineq.epr_from_abc(1, 1, 0)
    assert ops.alpha == (1.0, 0.0) and ops.beta == (0.0, 1.0)
    assert np.max(np.abs(ineq.epr_from_abc(2, 1, 1).residuals(2, 1, 1))) <= 1e-12
    with pytest.raises(ConstraintError):
        ineq.epr_from_abc(1, 1, 2.01)
    with pytest.raises(ConstraintError):
        ineq.epr_from_abc(0, 1, 0)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(-1, 1))
def test_epr_from_abc_constraints(a, b, cf):
    c = cf * 2 * math.sqrt(a * b)
    res = ineq.epr_from_abc(a, b, c).residuals(a, b, c)
    assert np.max(np.abs(res)) <= 1e-12 * max(a, b)


def test_corfour_matches_corineq(rng):
    sp = PhaseSpace(2)
    for a, b, c in ((2, 1, 1), (1, 3, -2), (0.5, 0.5, 0.3)):
        C = random_admissible(rng, 2)
        assert ineq.corfour(sp, a, b, c).lhs(C) == pytest.approx(ineq.corineq(sp, a, b, c).lhs(C), rel=1e-12)


def test_duan_limit_bound():
    sp = PhaseSpace(2)
    assert ineq.duan(sp).bound == 0.0
    assert ineq.duan(sp, 2, 1).bound == pytest.approx(1.0)
    assert ineq.corfour(sp, 1, 1, 2).bound == 0.0


@pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
def test_duan_detects_two_mode_squeezing(r, hbar):
    C = two_mode_squeezed_covariance(r, hbar)
    spec = ineq.duan(PhaseSpace(2, hbar))
    assert spec.lhs(C) == pytest.approx(2 * hbar * math.exp(-2 * r), rel=1e-12)
    assert ineq.detect_entanglement(C, spec) is Verdict.ENTANGLED


def test_vacuum_is_inconclusive(hbar):
    for n in (2, 3):
        for spec in ineq.catalog(PhaseSpace(n, hbar)):
            if spec.separable_bound is not None:
                assert ineq.detect_entanglement(vacuum(n, hbar), spec) is Verdict.INCONCLUSIVE


def test_detect_requires_physical_input():
    spec = ineq.duan(PhaseSpace(2))
    with pytest.raises(DefinitenessError):
        ineq.detect_entanglement(CovarianceMatrix.from_array(0.1 * np.eye(4)), spec)
    with pytest.raises(DomainError):
        ineq.detect_entanglement(vacuum(2), ineq.detrs(PhaseSpace(2)))


def test_triplesep_detects_oracle_state():
    spec = ineq.triplesep(PhaseSpace(3))
    value, C = brute_force_minimize(spec.functional, restarts=8, seed=1)
    assert value < spec.separable_bound
    assert ineq.detect_entanglement(C, spec) is Verdict.ENTANGLED


def test_no_false_positives_on_product_states(rng):
    for n in (2, 3):
        specs = [s for s in ineq.catalog(PhaseSpace(n)) if s.separable_bound is not None]
        for _ in range(200):
            C = CovarianceMatrix.from_array(random_pure(rng, n, product=True, max_squeeze=1.5))
            for spec in specs:
                assert ineq.detect_entanglement(C, spec) is Verdict.INCONCLUSIVE, spec.label
