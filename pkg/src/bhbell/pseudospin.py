"""Pseudo-spin correlators of the outgoing Gaussian state.

Each outgoing mode carries the pseudo-spin operators

    Pi_z = (-1)^n,   Pi_x = sgn(q),   Pi_y = i Pi_x Pi_z,

whose Weyl symbols are

    W_x = sgn(q),   W_y = delta(q) PV(1/p),   W_z = pi delta(q) delta(p).

For a zero-mean Gaussian state the quadratures (q_j, p_j) are normal with
covariance sigma / 2, so a correlator T_{r s t} = <Pi_r x Pi_s x Pi_t> is an
expectation over a normal vector where some components are *pinned* to zero
(the delta factors) and the remaining ones enter through sgn(.) or 1/(.).
After conditioning on the pinned set at most two random factors survive, and
every such two-factor expectation has a closed form:

    E[sgn X sgn Y] = (2/pi) arcsin rho
    E[sgn X / Y]   = sqrt(2/pi) / s_Y  arsinh(C / sqrt(s_Y^2 s_X^2 - C^2))
    E[1 / (Y1 Y2)] = arcsin rho / (s_1 s_2 sqrt(1 - rho^2))        (PV)

Expectations with an odd number of random factors vanish by symmetry.
``phase_space_correlator`` implements this directly; the explicit formulas in
``two_mode_correlators`` / ``three_mode_correlators`` are checked against it
and against the truncated Fock-space oracle below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import _kernels
from .errors import ModeAbsent, PhysicalityViolation, QuadratureFailure, TruncationTooSmall
from .gaussian_state import SecondMoments, covariance_sigma, delta_closed_form, reduced

AXES = "xyz"


def _axis_index(ax) -> int:
    if isinstance(ax, int):
        return ax
    return AXES.index(str(ax).lower())


# --------------------------------------------------------------------------
# exact phase-space evaluator


def _pair_expectation(kinds, K: np.ndarray) -> float:
    (k1, k2) = kinds
    v1, v2, c = K[0, 0], K[1, 1], K[0, 1]
    s1, s2 = math.sqrt(v1), math.sqrt(v2)
    rho = max(-1.0, min(1.0, c / (s1 * s2)))
    if k1 == "s" and k2 == "s":
        return 2.0 / math.pi * math.asin(rho)
    if k1 == "r" and k2 == "r":
        return math.asin(rho) / (s1 * s2 * math.sqrt(1.0 - rho * rho))
    if k1 == "r":  # make the first factor the sgn one
        v1, v2, s1, s2 = v2, v1, s2, s1
    return math.sqrt(2.0 / math.pi) / s2 * math.asinh(c / math.sqrt(v2 * v1 - c * c))


def phase_space_correlator(sigma: np.ndarray, axes) -> float:
    """<Pi_{axes[0]} x Pi_{axes[1]} x ...> for the Gaussian state with covariance ``sigma``.

    ``axes`` has one entry per mode of ``sigma``: 'x', 'y', 'z' or 'i' (identity).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0] // 2
    if len(axes) != n:
        raise ValueError("need one axis per mode")
    C = 0.5 * sigma
    pinned, factors, kinds = [], [], []
    nz = 0
    for j, ax in enumerate(axes):
        ax = str(ax).lower()
        if ax == "x":
            factors.append(2 * j)
            kinds.append("s")
        elif ax == "y":
            pinned.append(2 * j)
            factors.append(2 * j + 1)
            kinds.append("r")
        elif ax == "z":
            pinned += [2 * j, 2 * j + 1]
            nz += 1
        elif ax not in ("i", "1"):
            raise ValueError(f"unknown axis {ax!r}")
    if len(factors) % 2 == 1:
        return 0.0
    if len(factors) > 2:
        raise NotImplementedError("more than two random factors")
    pref = math.pi**nz
    if pinned:
        Cpp = C[np.ix_(pinned, pinned)]
        pref *= 1.0 / ((2 * math.pi) ** (len(pinned) / 2) * math.sqrt(np.linalg.det(Cpp)))
    if not factors:
        return float(pref)
    K = C[np.ix_(factors, factors)]
    if pinned:
        Crp = C[np.ix_(factors, pinned)]
        K = K - Crp @ np.linalg.solve(Cpp, Crp.T)
    return float(pref * _pair_expectation(kinds, K))


def phase_space_tensor(sigma: np.ndarray) -> np.ndarray:
    """Full correlation tensor (3^n entries) of an n-mode state, n = 2 or 3."""
    n = sigma.shape[0] // 2
    T = np.zeros((3,) * n)
    for idx in product(range(3), repeat=n):
        T[idx] = phase_space_correlator(sigma, [AXES[i] for i in idx])
    return T


# --------------------------------------------------------------------------
# closed forms


def _pair(pair) -> tuple[int, int]:
    if isinstance(pair, str):
        s = "".join(ch for ch in pair if ch.isdigit())
        return int(s[0]), int(s[1])
    return tuple(pair)


def two_mode_correlators(mom: SecondMoments, pair, basis: str = "c") -> np.ndarray:
    """3x3 correlation matrix T_rs (r on the first mode of ``pair``).

    ``basis='standard'`` returns the matrix after local rotations that make
    the squeezing coefficient real and positive (only for pairs with mode 2).
    """
    i, j = _pair(pair)
    a = mom.a
    if (i, j) not in ((0, 2), (1, 2)):
        if basis != "c":
            raise ValueError("standard form only for the (i|2) pairs")
        return phase_space_tensor(reduced(covariance_sigma(mom), (i, j)))
    m = mom.m02 if i == 0 else mom.m12
    ai, a2 = a[i], a[2]
    if basis == "standard":
        m = abs(m)
    elif basis != "c":
        raise ValueError(f"unknown basis {basis!r}")
    A = ai * a2 - 4 * abs(m) ** 2
    T = np.zeros((3, 3))
    T[2, 2] = 1.0 / A
    T[0, 0] = 2 / math.pi * math.atan(2 * m.real / math.sqrt(ai * a2 - 4 * m.real**2))
    T[1, 1] = -T[0, 0] / A
    T[0, 1] = 2 / (math.pi * a2) * math.asinh(2 * m.imag / math.sqrt(A))
    T[1, 0] = 2 / (math.pi * ai) * math.asinh(2 * m.imag / math.sqrt(A))
    return T


def three_mode_correlators(mom: SecondMoments) -> np.ndarray:
    """3x3x3 tensor T_rst = <Pi_r(0) Pi_s(1) Pi_t(2)> from the second moments."""
    a0, a1, a2 = mom.a
    m01, m02, m12 = mom.m01, mom.m02, mom.m12
    A01 = a0 * a1 - 4 * abs(m01) ** 2
    A02 = a0 * a2 - 4 * abs(m02) ** 2
    A12 = a1 * a2 - 4 * abs(m12) ** 2
    Z0 = -2 * a0 * np.conj(m12) + 4 * m01 * np.conj(m02)
    Z1 = -2 * a1 * np.conj(m02) + 4 * np.conj(m01) * np.conj(m12)
    Z2 = -2 * a2 * np.conj(m01) + 4 * m12 * np.conj(m02)
    d = delta_closed_form(mom)
    if not d > 0:
        # sqrt(det sigma) is a difference of O(a^3) terms; it is lost to
        # rounding when the occupations are enormous (omega/Omega << 1e-4)
        raise PhysicalityViolation(f"sqrt(det sigma) = {d:.3e} is not positive")
    x, y, z = 0, 1, 2
    T = np.zeros((3, 3, 3))
    T[z, z, z] = 1.0 / d

    def at(ak, Aa, Ab, Zk):
        return -2 / (math.pi * ak) * math.atan(Zk.real / math.sqrt(Aa * Ab - Zk.real**2))

    T[z, x, x] = at(a0, A01, A02, Z0)
    T[x, z, x] = at(a1, A01, A12, Z1)
    T[x, x, z] = at(a2, A02, A12, Z2)
    T[z, y, y] = -a0 / d * T[z, x, x]
    T[y, z, y] = -a1 / d * T[x, z, x]
    T[y, y, z] = a2 / d * T[x, x, z]

    def ash(ak, Zk):
        return 2 / math.pi * math.asinh(Zk.imag / math.sqrt(ak * d))

    T[z, x, y] = ash(a0, Z0) / A02
    T[z, y, x] = ash(a0, Z0) / A01
    T[y, z, x] = ash(a1, Z1) / A01
    T[x, z, y] = ash(a1, Z1) / A12
    T[x, y, z] = -ash(a2, Z2) / A12
    T[y, x, z] = ash(a2, Z2) / A02
    return T


@dataclass(frozen=True)
class CorrelatorTensor:
    two_mode: dict
    three_mode: np.ndarray
    basis: str
    omega: float
    temperature: float


def correlator_tensor(mom: SecondMoments, basis: str = "c") -> CorrelatorTensor:
    """All two-mode matrices (pairs 02, 12, 01) and the three-mode tensor."""
    pairs = {"02": two_mode_correlators(mom, (0, 2), basis),
             "12": two_mode_correlators(mom, (1, 2), basis)}
    pairs["01"] = two_mode_correlators(mom, (0, 1), "c")
    return CorrelatorTensor(pairs, three_mode_correlators(mom), basis, mom.omega, mom.temperature)


# --------------------------------------------------------------------------
# Fock-space oracle


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """psi_0..psi_n_max evaluated at ``x`` (rows) via the stable recurrence."""
    x = np.asarray(x, dtype=float)
    psi = np.zeros((n_max + 1, x.size))
    psi[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


@lru_cache(maxsize=8)
def _half_line_overlaps(n_max: int, nodes: int | None = None) -> np.ndarray:
    # Hermite functions up to n_max live inside |x| < sqrt(2 n_max + 1); beyond
    # that they decay like a Gaussian, so a finite interval suffices.
    L = math.sqrt(2 * n_max + 1) + 12.0
    nodes = nodes or 4 * n_max + 200
    t, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * L * (t + 1)
    w = 0.5 * L * w
    psi = hermite_functions(n_max, x)
    G = 2.0 * (psi * w) @ psi.T
    diag = np.diag(G)
    if np.max(np.abs(diag - 1.0)) > 1e-10:
        raise QuadratureFailure(f"half-line norms off by {np.max(np.abs(diag - 1.0)):.2e}")
    return G


def pseudospin_matrix(axis, n_max: int) -> np.ndarray:
    """Matrix of Pi_axis in the Fock basis |0>..|n_max>."""
    k = _axis_index(axis)
    n = np.arange(n_max + 1)
    Pz = np.diag((-1.0) ** n)
    if k == 2:
        return Pz.astype(complex)
    G = _half_line_overlaps(n_max)
    odd = ((n[:, None] + n[None, :]) % 2) == 1
    Px = np.where(odd, G, 0.0)
    if k == 0:
        return Px.astype(complex)
    return 1j * Px @ Pz


@dataclass(frozen=True)
class FockState:
    """|psi> = sum_{mu,nu} amp[mu, nu] |mu, nu, mu + nu> (zero-temperature out state)."""

    amp: np.ndarray
    n_max: int
    captured_norm: float


def _fock_amplitudes(X02: complex, X12: complex, s22: float, n_max: int) -> np.ndarray:
    mu = np.arange(n_max + 1)
    M, N = np.meshgrid(mu, mu, indexing="ij")
    keep = M + N <= n_max
    from scipy.special import gammaln

    logb = gammaln(M + N + 1) - gammaln(M + 1) - gammaln(N + 1)
    la02 = math.log(abs(X02)) if X02 != 0 else -np.inf
    la12 = math.log(abs(X12)) if X12 != 0 else -np.inf
    with np.errstate(invalid="ignore"):  # 0 * -inf on the unused branch of where()
        logmag = 0.5 * logb + np.where(M > 0, M * la02, 0.0) + np.where(N > 0, N * la12, 0.0) - math.log(s22)
    ph = np.exp(1j * (M * np.angle(X02) + N * np.angle(X12)))
    amp = np.where(keep, np.exp(logmag) * ph, 0.0)
    return amp


def fock_oracle_state(S, mom: SecondMoments, n_start: int = 40, n_cap: int = 160,
                      min_norm: float = 0.999) -> FockState:
    """Truncated Fock representation of the zero-temperature three-mode state.

    Magnitudes follow from S (|X_i2| = |S_i2| / |S22|); phases follow from the
    moments, so the state is expressed in the same mode basis as ``mom``.
    """
    if S.dim != 3:
        raise ModeAbsent("the three-mode state needs omega < Omega")
    s22 = abs(S[2, 2])
    X02 = abs(S[0, 2]) / s22 * np.exp(1j * np.angle(mom.m02))
    X12 = abs(S[1, 2]) / s22 * np.exp(1j * np.angle(mom.m12))
    n = n_start
    while True:
        amp = _fock_amplitudes(X02, X12, s22, n)
        norm = float(np.sum(np.abs(amp) ** 2))
        if norm >= min_norm:
            return FockState(amp / math.sqrt(norm), n, norm)
        if n >= n_cap:
            raise TruncationTooSmall(f"captured norm {norm:.4f} < {min_norm} at n_max={n}")
        n = min(2 * n, n_cap)


def fock_oracle_correlator(state: FockState, axes) -> float:
    """<psi| Pi_a x Pi_b x Pi_c |psi> by direct tensor contraction."""
    n = state.n_max
    mats = [pseudospin_matrix(ax, n) for ax in axes]
    val = _kernels.fock_contract(state.amp, mats[0], mats[1], mats[2])
    return float(val.real)


def fock_oracle_tensor(S, mom: SecondMoments, n_start: int = 40, n_cap: int = 160,
                       shift_tol: float = 1e-4) -> tuple[np.ndarray, FockState]:
    """Full 3x3x3 tensor from the Fock oracle with the doubling convergence rule.

    n_max doubles from ``n_start`` until the captured norm is >= 0.999 and no
    entry moves by more than ``shift_tol``; beyond ``n_cap`` the truncation
    is declared too small.
    """
    state = fock_oracle_state(S, mom, n_start, n_cap)
    prev = None
    while True:
        T = np.zeros((3, 3, 3))
        for idx in product(range(3), repeat=3):
            T[idx] = fock_oracle_correlator(state, [AXES[i] for i in idx])
        if prev is not None and np.max(np.abs(T - prev)) < shift_tol:
            return T, state
        if state.n_max >= n_cap:
            if prev is None:
                return T, state
            raise TruncationTooSmall(f"correlators still moving at n_max={state.n_max}")
        prev = T
        state = fock_oracle_state(S, mom, min(2 * state.n_max, n_cap), n_cap)


def fock_moments(state: FockState) -> dict:
    """Second moments of the truncated state (for consistency checks)."""
    amp = state.amp
    n = state.n_max
    mu = np.arange(n + 1)
    M, N = np.meshgrid(mu, mu, indexing="ij")
    p = np.abs(amp) ** 2
    out = {"nc0": float(np.sum(p * M)), "nc1": float(np.sum(p * N)), "nc2": float(np.sum(p * (M + N)))}
    # <c0 c2>: |mu,nu,N> -> sqrt(mu N) |mu-1,nu,N-1>
    out["m02"] = complex(np.sum(np.conj(amp[:-1, :]) * amp[1:, :] * np.sqrt((M[1:, :]) * (M[1:, :] + N[1:, :]))))
    out["m12"] = complex(np.sum(np.conj(amp[:, :-1]) * amp[:, 1:] * np.sqrt((N[:, 1:]) * (M[:, 1:] + N[:, 1:]))))
    return out


# --------------------------------------------------------------------------
# GHZ eigen-relations

#: (axes, expected eigenvalue) of the four stabiliser-like operators
GHZ_OPERATORS = (("yyz", 1), ("yzy", 1), ("zyy", -1), ("zzz", 1))


@dataclass(frozen=True)
class GHZReport:
    residuals: tuple[float, float, float, float]
    expectations: tuple[float, float, float, float]
    signs: tuple[int, int, int, int]
    method: str


def ghz_residual(expectation: float, eigenvalue: int) -> float:
    """|| (O - lambda) psi || for an operator with spectrum {-1, +1}."""
    return math.sqrt(max(0.0, 2.0 - 2.0 * eigenvalue * expectation))


def ghz_eigenrelation_check(state) -> GHZReport:
    """Residuals ||(O - lambda)|psi>|| of the four GHZ eigen-relations.

    ``state`` is either a ``FockState`` (direct contraction in the truncated
    space) or ``SecondMoments`` (closed-form correlators; the only practical
    route once |S22| is large, i.e. at very small omega).  For operators with
    spectrum {-1, +1} the residual equals sqrt(2 - 2 lambda <O>).
    """
    if isinstance(state, FockState):
        ex = [fock_oracle_correlator(state, a) for a, _ in GHZ_OPERATORS]
        method = "fock"
    elif isinstance(state, SecondMoments):
        idx = {c: i for i, c in enumerate(AXES)}
        T = three_mode_correlators(state)
        ex = [float(T[idx[a[0]], idx[a[1]], idx[a[2]]]) for a, _ in GHZ_OPERATORS]
        method = "analytic"
    else:
        raise TypeError("expected FockState or SecondMoments")
    res = tuple(ghz_residual(e, s) for e, (_, s) in zip(ex, GHZ_OPERATORS))
    return GHZReport(res, tuple(ex), tuple(s for _, s in GHZ_OPERATORS), method)
