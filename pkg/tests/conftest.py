from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from uncert.symplectic import PhaseSpace, random_symplectic

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[1.0, 0.37, 2.5], ids=lambda h: f"hbar={h}")
def hbar(request):
    return request.param


def random_spd(rng, dim, cond=1e3):
    """Symmetric positive-definite matrix with eigenvalues spread over ``cond``."""
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    evals = np.exp(rng.uniform(0, np.log(cond), dim))
    return (q * evals) @ q.T


def random_admissible(rng, n_modes, hbar=1.0, max_excess=3.0, max_squeeze=1.0):
    S = random_symplectic(n_modes, rng, max_squeeze=max_squeeze)
    nu = hbar * (0.5 + rng.uniform(0, max_excess, n_modes))
    return S @ np.diag(np.repeat(nu, 2)) @ S.T


def random_pure(rng, n_modes, hbar=1.0, product=False, max_squeeze=1.0):
    S = random_symplectic(n_modes, rng, max_squeeze=max_squeeze, product=product)
    return 0.5 * hbar * S @ S.T


def omega_oracle_eigs(M):
    """Symplectic eigenvalues as moduli of the spectrum of i Omega M (descending)."""
    n = M.shape[0] // 2
    om = PhaseSpace(n).omega
    ev = np.abs(np.linalg.eigvals(1j * om @ M))
    return np.sort(ev)[::-1][::2]


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
