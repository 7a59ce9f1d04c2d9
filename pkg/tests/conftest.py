import numpy as np
import pytest

from bhbell.bdg_scattering import ScatteringMatrix
from bhbell.flow_config import FlowKind, build_config

M_U_REF = 0.587


def haar_u2(rng):
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_smatrix(rng, r_max=2.5, omega=0.1):
    """A random element of U(2,1): passive mixing of 0,1 around a 1-2 squeezer."""
    r = rng.uniform(0.0, r_max)
    U = np.eye(3, dtype=complex)
    U[:2, :2] = haar_u2(rng)
    V = np.eye(3, dtype=complex)
    V[:2, :2] = haar_u2(rng)
    sq = np.eye(3, dtype=complex)
    sq[1:, 1:] = [[np.cosh(r), np.sinh(r)], [np.sinh(r), np.cosh(r)]]
    d1 = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    d2 = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    return ScatteringMatrix(omega, d1 @ U @ sq @ V @ d2, None, 1.0)


def all_configs(m_us=(0.2, 0.5, 0.8)):
    out = []
    for m in m_us:
        out.append(build_config(FlowKind.Waterfall, m))
        out.append(build_config(FlowKind.DeltaPeak, m))
        out.append(build_config(FlowKind.FlatProfile, m, m**-2))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def waterfall_ref():
    return build_config(FlowKind.Waterfall, M_U_REF)


#: one "PASS/FAIL criterion ..." line per acceptance check, filled by test_acceptance
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
