"""Shared fixtures: small baths reused across the suite.

Also collects the acceptance verdicts (see test_acceptance.py) and prints
one line per criterion at the end of the run, so the pass/fail summary
survives in plain `pytest -v` output.
"""

import numpy as np
import pytest

from qspec.baths import BathModel, single_qubit_bath

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict} - {detail}")


def random_hermitian(d, rng, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (m + m.conj().T) / 2.0


def random_density(d, rng):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def qubit_bath():
    return single_qubit_bath(a=0.1, b=1.0)


@pytest.fixture
def three_spin_bath():
    """Three-spin dephasing bath with commuting A and B (both diagonal)."""
    rng = np.random.default_rng(7)
    d = 8
    a_diag = rng.normal(0.0, 0.12, size=d)
    b_diag = rng.normal(0.0, 1.0, size=d)
    rho = np.eye(d) / d
    return BathModel(np.diag(a_diag).astype(complex),
                     np.diag(b_diag).astype(complex), rho.astype(complex),
                     a_norm_eff=float(np.max(np.abs(a_diag))),
                     label="three-spin diagonal")


@pytest.fixture
def mixing_bath():
    """Two-spin bath where A and B do not commute (generic dephasing lines)."""
    rng = np.random.default_rng(11)
    a = random_hermitian(4, rng, scale=0.1)
    b = random_hermitian(4, rng, scale=1.0)
    return BathModel(a, b, random_density(4, rng),
                     a_norm_eff=float(np.linalg.norm(a, 2)),
                     label="two-spin generic")
