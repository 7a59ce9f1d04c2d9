"""Outgoing Gaussian state: occupations, second moments, covariance, PPT measure.

Quadratures are q = (c + c^dagger)/sqrt(2), p = i(c^dagger - c)/sqrt(2) and the
covariance matrix is that of xi = sqrt(2)(q0, p0, q1, p1, q2, p2), so the
vacuum has sigma = identity.

Phase conventions
-----------------
Outgoing operators are defined only up to a phase each, and the pseudo-spin
correlators (unlike entanglement measures) are not invariant under such
rephasing.  ``second_moments`` therefore takes the mode phases explicitly.
The default, ``"optical"``, uses the optical-model basis

    e0 = s0 (S02*/|S02|) c0,   e1 = (S12*/|S12|) c1,   e2 = s2 (S22/|S22|) c2,

in which all three zero-temperature moments are real.  The signs (s0, s2) are
(-1, +1) for the soliton flows and (+1, -1) for the flat profile; they are
phase-space rotations by pi and only fix the sign pattern of the three-mode
correlators in the long-wavelength limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bdg_scattering import ScatteringMatrix, optical_model
from .dispersion import comoving_frequency, threshold_omega
from .errors import ModeAbsent, PhysicalityViolation
from .flow_config import FlowConfig, FlowKind

#: standard symplectic form for three modes
OMEGA3 = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class SecondMoments:
    omega: float
    temperature: float
    nc0: float
    nc1: float
    nc2: float
    m01: complex  # <c0 c1^dagger>
    m02: complex  # <c0 c2>
    m12: complex  # <c1 c2>
    nbar0: float = 0.0
    nbar1: float = 0.0
    nbar2: float = 0.0

    @property
    def a(self) -> tuple[float, float, float]:
        """Local mixednesses a_j = 1 + 2 <c_j^dagger c_j>."""
        return 1 + 2 * self.nc0, 1 + 2 * self.nc1, 1 + 2 * self.nc2

    def n(self, j: int) -> float:
        return (self.nc0, self.nc1, self.nc2)[j]

    def rephased(self, alpha0: complex, alpha1: complex, alpha2: complex) -> "SecondMoments":
        """Moments after c_j -> alpha_j c_j with |alpha_j| = 1."""
        return replace(
            self,
            m01=complex(alpha0 * np.conj(alpha1) * self.m01),
            m02=complex(alpha0 * alpha2 * self.m02),
            m12=complex(alpha1 * alpha2 * self.m12),
        )


@dataclass(frozen=True)
class CovarianceMatrix:
    sigma: np.ndarray
    delta: float


# --------------------------------------------------------------------------
# occupations and moments


def thermal_occupation(config: FlowConfig, j: int, omega: float, T: float) -> float:
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if j == 2 and omega >= threshold_omega(config):
        raise ModeAbsent("no negative-norm ingoing channel above threshold")
    if T == 0:
        return 0.0
    wB = comoving_frequency(config, j, omega)
    return float(1.0 / math.expm1(wB / T))


def thermal_occupations(config: FlowConfig, omega: float, T: float) -> tuple[float, float, float]:
    """Bose occupations of the three ingoing channels at their comoving frequencies."""
    return tuple(thermal_occupation(config, j, omega, T) for j in range(3))


def optical_phases(S: ScatteringMatrix) -> tuple[complex, complex, complex]:
    """Mode phases of the default correlator basis (see module docstring)."""
    S = S.entries if isinstance(S, ScatteringMatrix) else np.asarray(S)
    return (np.conj(S[0, 2]) / abs(S[0, 2]), np.conj(S[1, 2]) / abs(S[1, 2]), S[2, 2] / abs(S[2, 2]))


def _sign_pattern(config: FlowConfig | None) -> tuple[float, float]:
    if config is not None and config.kind is FlowKind.FlatProfile:
        return 1.0, -1.0
    return -1.0, 1.0


def second_moments(S: ScatteringMatrix, nbar=(0.0, 0.0, 0.0), temperature: float | None = None,
                   phases="optical") -> SecondMoments:
    """Outgoing second moments from S and the ingoing occupations.

    Args:
        S: 3x3 scattering matrix.
        nbar: ingoing occupations (n0, n1, n2).
        temperature: stored as metadata only.
        phases: ``"optical"`` (default basis, see module docstring), ``"e"``
            (optical-model basis without sign flips), ``"raw"`` (the phases
            of S itself) or an explicit triple of unit complex numbers.
    """
    if S.dim != 3:
        raise ModeAbsent("second moments need the 3x3 scattering matrix")
    M = S.entries
    n0, n1, n2 = (float(v) for v in nbar)
    w = np.array([n0, n1, 1.0 + n2])
    nc0 = float(np.sum(np.abs(M[0]) ** 2 * w))
    nc1 = float(np.sum(np.abs(M[1]) ** 2 * w))
    nc2 = float(np.sum(np.abs(M[2]) ** 2 * w) - 1.0)
    m01 = complex(np.sum(M[0] * np.conj(M[1]) * w))
    m02 = complex(np.sum(M[0] * np.conj(M[2]) * w))
    m12 = complex(np.sum(M[1] * np.conj(M[2]) * w))
    T = 0.0 if temperature is None else float(temperature)
    mom = SecondMoments(S.omega, T, nc0, nc1, nc2, m01, m02, m12, n0, n1, n2)
    if isinstance(phases, str):
        if phases == "raw":
            return mom
        alpha = optical_phases(S)
        if phases == "optical":
            s0, s2 = _sign_pattern(S.config)
            alpha = (s0 * alpha[0], alpha[1], s2 * alpha[2])
        elif phases != "e":
            raise ValueError(f"unknown phase convention {phases!r}")
    else:
        alpha = phases
    return mom.rephased(*alpha)


def moments_at(config: FlowConfig, omega: float, T: float, phases="optical", S=None) -> SecondMoments:
    """Convenience: S-matrix, occupations and moments at one (omega, T)."""
    from .bdg_scattering import smatrix

    if S is None:
        S = smatrix(config, omega)
    return second_moments(S, thermal_occupations(config, omega, T), T, phases)


# --------------------------------------------------------------------------
# covariance matrix


def _rot_block(m: complex) -> np.ndarray:
    return 2 * np.array([[m.real, -m.imag], [m.imag, m.real]])


def _sq_block(m: complex) -> np.ndarray:
    return 2 * np.array([[m.real, m.imag], [m.imag, -m.real]])


def covariance_sigma(mom: SecondMoments) -> np.ndarray:
    a0, a1, a2 = mom.a
    s = np.zeros((6, 6))
    s[0:2, 0:2] = a0 * np.eye(2)
    s[2:4, 2:4] = a1 * np.eye(2)
    s[4:6, 4:6] = a2 * np.eye(2)
    e01, e02, e12 = _rot_block(mom.m01), _sq_block(mom.m02), _sq_block(mom.m12)
    s[0:2, 2:4], s[2:4, 0:2] = e01, e01.T
    s[0:2, 4:6], s[4:6, 0:2] = e02, e02.T
    s[2:4, 4:6], s[4:6, 2:4] = e12, e12.T
    return s


def physicality_floor(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of sigma + i Omega (>= 0 for a physical state)."""
    n = sigma.shape[0] // 2
    Om = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return float(np.linalg.eigvalsh(sigma + 1j * Om).min())


def covariance(mom: SecondMoments, check: bool = True, tol: float = 1e-9) -> CovarianceMatrix:
    sigma = covariance_sigma(mom)
    if check:
        floor = physicality_floor(sigma)
        if floor < -tol * max(1.0, np.abs(sigma).max()):
            raise PhysicalityViolation(f"sigma + i Omega has eigenvalue {floor:.3e}")
    sign, logdet = np.linalg.slogdet(sigma)
    delta = math.exp(0.5 * logdet) if sign > 0 else float("nan")
    return CovarianceMatrix(sigma, delta)


def delta_closed_form(mom: SecondMoments) -> float:
    """sqrt(det sigma) as a polynomial in the moments."""
    a0, a1, a2 = mom.a
    return float(a0 * a1 * a2 + 16 * (mom.m01 * mom.m12 * np.conj(mom.m02)).real
                 - 4 * a0 * abs(mom.m12) ** 2 - 4 * a1 * abs(mom.m02) ** 2 - 4 * a2 * abs(mom.m01) ** 2)


def reduced(sigma: np.ndarray, modes) -> np.ndarray:
    idx = [k for j in modes for k in (2 * j, 2 * j + 1)]
    return sigma[np.ix_(idx, idx)]


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Symplectic spectrum (ascending, each value listed once)."""
    n = sigma.shape[0] // 2
    Om = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.abs(np.linalg.eigvals(1j * Om @ sigma))
    return np.sort(ev)[::2]


def partial_transpose(sigma: np.ndarray, mode: int) -> np.ndarray:
    """Mirror reflection p_mode -> -p_mode."""
    d = np.ones(sigma.shape[0])
    d[2 * mode + 1] = -1.0
    return sigma * np.outer(d, d)


def ppt_measure_general(sigma4: np.ndarray) -> float:
    """1 - smallest symplectic eigenvalue of the partially transposed 4x4 covariance."""
    return float(1.0 - symplectic_eigenvalues(partial_transpose(sigma4, 1))[0])


def _pair(pair) -> tuple[int, int]:
    if isinstance(pair, str):
        pair = pair.replace("|", "").replace(",", "").replace("(", "").replace(")", "")
        return int(pair[0]), int(pair[1])
    return tuple(pair)


def ppt_measure(mom: SecondMoments, pair) -> float:
    """PPT entanglement measure Lambda for the pair (0|2), (1|2) or (0|1)."""
    i, j = _pair(pair)
    if (i, j) in ((0, 2), (1, 2)):
        ni, n2 = mom.n(i), mom.nc2
        m = mom.m02 if i == 0 else mom.m12
        return float(-ni - n2 + math.sqrt((ni - n2) ** 2 + 4 * abs(m) ** 2))
    if (i, j) == (0, 1):
        return ppt_measure_general(reduced(covariance_sigma(mom), (0, 1)))
    raise ValueError(f"unsupported pair {pair!r}")


# --------------------------------------------------------------------------
# optical-model (f) modes


@dataclass(frozen=True)
class FModeState:
    nf0: float
    nf1: float
    nf2: float
    mf12: float
    r2: float
    theta: float | None
    nbar01: float
    lambda_f: float
    B_f: float


def fmode_state(S: ScatteringMatrix, nbar=(0.0, 0.0, 0.0)) -> FModeState:
    """Occupations of the optical-model modes and their two-mode witnesses."""
    if S.dim != 3:
        raise ModeAbsent("the optical model needs the 3x3 scattering matrix")
    M = S.entries
    opt = optical_model(S)
    n0, n1, n2 = (float(v) for v in nbar)
    sh2 = math.sinh(opt.r2) ** 2
    ch2 = math.cosh(opt.r2) ** 2
    if sh2 == 0:
        nf0 = 0.0
        n01 = 0.0
    else:
        nf0 = sum(abs(M[1, 2] * M[0, i] - M[0, 2] * M[1, i]) ** 2 * (n0, n1)[i] for i in range(2)) / sh2
        n01 = (abs(M[2, 0]) ** 2 * n0 + abs(M[2, 1]) ** 2 * n1) / sh2
    nf1 = ch2 * n01 + sh2 * (1 + n2)
    nf2 = sh2 * n01 + ch2 * (1 + n2) - 1
    mf12 = math.cosh(opt.r2) * math.sinh(opt.r2) * (n01 + n2 + 1)
    # cancellation-free forms: with s = n01 + n2 + 1 and d = n01 - n2,
    # 4(mf12^2 - nf1 nf2) = 2 s cosh(2 r2) - s^2 - 1 + d^2 and
    # (1 + 2 nf1)(1 + 2 nf2) - 4 mf12^2 = (1 + 2 n01)(1 + 2 n2)
    s_, d_ = n01 + n2 + 1, n01 - n2
    c2r = math.cosh(2 * opt.r2)
    den = math.sqrt((nf1 - nf2) ** 2 + 4 * mf12**2) + nf1 + nf2
    lam = (2 * s_ * c2r - s_ * s_ - 1 + d_ * d_) / den if den > 0 else 0.0
    A = (1 + 2 * n01) * (1 + 2 * n2)
    B = 2 * math.sqrt((2 / math.pi) ** 2 * math.atan(2 * mf12 / math.sqrt(A)) ** 2 + 1 / A**2)
    return FModeState(float(nf0), float(nf1), float(nf2), float(mf12), opt.r2, opt.theta, float(n01), lam, B)


def fbasis_moments(mom_e: SecondMoments, theta: float) -> SecondMoments:
    """Second moments of (f0, f1, f2) from the optical-model e-basis moments.

    f0 = -sin(theta) e0 + cos(theta) e1,  f1 = cos(theta) e0 + sin(theta) e1,  f2 = e2.
    """
    s, c = math.sin(theta), math.cos(theta)
    R = np.array([[-s, c], [c, s]])
    # G[i, j] = <e_i^dagger e_j>
    G = np.array([[mom_e.nc0, np.conj(mom_e.m01)], [mom_e.m01, mom_e.nc1]])
    Gf = R @ G @ R.T
    K = R @ np.array([mom_e.m02, mom_e.m12])
    return replace(mom_e, nc0=float(Gf[0, 0].real), nc1=float(Gf[1, 1].real), m01=complex(Gf[1, 0]),
                   m02=complex(K[0]), m12=complex(K[1]))
