r"""Flux-normalised Bogoliubov scattering matrix of the stationary flows.

Linear fluctuations (u, v) of the condensate Phi at frequency omega obey

    omega u = -u''/2 + (U + 2 g|Phi|^2 - mu) u + g Phi^2 v
   -omega v = -v''/2 + (U + 2 g|Phi|^2 - mu) v + g Phi*^2 u

and conserve the flux J = Im(u* u' + v* v').  In a uniform region every
solution is a superposition of four plane waves (one per root of the
dispersion quartic).  For the waterfall and delta-peak flows the upstream
region holds a grey soliton; because that potential is reflectionless, the
four solutions there are known in closed form:

    u = exp(i(V+q)x) P(t),  v = exp(i(q-V)x) Q(t),   t = tanh(kappa (x - x0)),

with P and Q quadratic polynomials in t and q the same quartic roots as in
the asymptotic uniform condensate.  The polynomial coefficients are the null
vector of a 10x6 linear system, obtained here by SVD.  A direct ODE
integration, :func:`smatrix_ode`, is kept as an independent check.

Every propagating mode is normalised to |J| = 1 and the phase of each mode is
fixed so that u is real positive at x = 0.  Matching u, v, u', v' at the
origin (with a derivative jump 2 Z (u, v) across a delta barrier) then gives
the outgoing amplitudes; S maps ingoing (0, 1, 2) to outgoing (0, 1, 2)
channels and satisfies S^dagger eta S = eta with eta = diag(1, 1, -1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .dispersion import (
    THRESHOLD_GUARD,
    Label,
    Region,
    channel_roots,
    find_root,
    threshold_omega,
)
from .errors import FitRange, MatchingSingular, ModeAbsent, NoConvergence, NonPositiveFrequency, ThresholdDegeneracy
from .flow_config import FlowConfig, FlowKind

ETA3 = np.diag([1.0, 1.0, -1.0])
ETA2 = np.eye(2)
COND_LIMIT = 1e12


@dataclass
class ScatteringMatrix:
    omega: float
    entries: np.ndarray
    config: FlowConfig
    Omega: float
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    @property
    def eta(self) -> np.ndarray:
        return ETA3 if self.dim == 3 else ETA2

    def residual(self) -> float:
        """max-norm of S^dagger eta S - eta and S eta S^dagger - eta."""
        S, eta = self.entries, self.eta
        r1 = np.abs(S.conj().T @ eta @ S - eta).max()
        r2 = np.abs(S @ eta @ S.conj().T - eta).max()
        return float(max(r1, r2))


@dataclass(frozen=True)
class OpticalModel:
    r2: float
    theta: float | None
    gamma0: float | None
    gamma1: float | None
    phase02: float
    phase12: float
    phase22: float


# --------------------------------------------------------------------------
# arithmetic back-ends: float64 numpy, or numpy object arrays of mpmath numbers


class _F64:
    extended = False

    def real(self, x):
        return float(x)

    def cplx(self, x):
        return complex(x)

    sqrt = staticmethod(np.sqrt)
    tanh = staticmethod(math.tanh)

    def array(self, seq):
        return np.array(seq, dtype=complex)

    def null_vector(self, M):
        scale = np.abs(M).max(axis=0)
        scale[scale == 0] = 1.0
        _, s, vh = np.linalg.svd(M / scale)
        if s[-1] > 1e-8 * s[0]:
            raise MatchingSingular(f"no polynomial soliton mode (singular value ratio {s[-1] / s[0]:.2e})")
        return vh[-1].conj() / scale

    def solve(self, A, B):
        return np.linalg.solve(A, B)


class _MP:
    extended = True

    def __init__(self, dps: int):
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps

    def real(self, x):
        return self.ctx.mpf(x)

    def cplx(self, x):
        return self.ctx.mpc(x)

    def sqrt(self, x):
        return self.ctx.sqrt(x)

    def tanh(self, x):
        return self.ctx.tanh(x)

    def array(self, seq):
        return np.array([self.ctx.mpc(v) for v in seq], dtype=object)

    def null_vector(self, M):
        # pivot chosen from the float64 null vector, then an exact-arithmetic
        # least-squares solve of the (consistent) remaining system
        c64 = _F64().null_vector(np.array(M, dtype=complex))
        k = int(np.argmax(np.abs(c64)))
        rest = [j for j in range(M.shape[1]) if j != k]
        A = self.ctx.matrix(M[:, rest].tolist())
        b = self.ctx.matrix([-v for v in M[:, k]])
        AH = A.transpose_conj()
        x = self.ctx.lu_solve(AH * A, AH * b)
        c = np.empty(M.shape[1], dtype=object)
        c[k] = self.ctx.mpc(1)
        for i, j in enumerate(rest):
            c[j] = x[i]
        return c

    def solve(self, A, B):
        Am = self.ctx.matrix(A.tolist())
        X = np.empty(B.shape, dtype=object)
        for col in range(B.shape[1]):
            x = self.ctx.lu_solve(Am, self.ctx.matrix(list(B[:, col])))
            X[:, col] = [x[i] for i in range(A.shape[0])]
        return X


# small dense polynomial helpers (coefficients low -> high, length 5)


def _pmul(a, b):
    out = [0] * 5
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            if i + j < 5:
                out[i + j] = out[i + j] + ai * bj
    return out


def _pder(a):
    return [k * a[k] for k in range(1, len(a))] + [0]


def _pval(a, t):
    acc = 0
    for c in reversed(list(a)):
        acc = acc * t + c
    return acc


# --------------------------------------------------------------------------
# background parameters in the requested arithmetic


@dataclass
class _Background:
    V_u: object
    c_u: object
    V_d: object
    c_d: object
    kappa: object
    t0: object
    Z: object
    beta_d: object  # exp(i beta) of the downstream condensate at x = 0
    soliton: bool


def _background(config: FlowConfig, B) -> _Background:
    m_u = B.real(config.m_u)
    one = B.real(1)
    if config.kind is FlowKind.FlatProfile:
        c_d = m_u / B.real(config.m_d)
        return _Background(m_u, one, m_u, c_d, 0, 0, 0, B.cplx(1), False)
    kappa = B.sqrt(one - m_u * m_u)
    if config.kind is FlowKind.Waterfall:
        n_d = m_u * m_u
        t0 = B.real(0)
    else:
        n_d = m_u * m_u / 4 * (one + B.sqrt(one + 8 / (m_u * m_u)))
        t0 = -B.sqrt(one - (one - n_d) / (kappa * kappa))
    Z = kappa * (one - n_d) * (-t0) / (2 * n_d)
    beta = (B.cplx(-1j) * m_u + kappa * t0) / B.sqrt(n_d)
    return _Background(m_u, one, m_u / n_d, B.sqrt(n_d), kappa, t0, Z, beta, True)


# --------------------------------------------------------------------------
# mode construction


@dataclass
class _Mode:
    label: Label
    q: object
    w0: np.ndarray  # (u, v, u', v') at x = 0 (upstream side, jump included)
    flux: float | None  # sign of J (|J| = 1 after normalisation); None if evanescent


def _polish_root(B, q, V, c, omega):
    coeffs = [-4 * omega * omega, 8 * omega * V, -4 * (V * V - c * c), 0, 1]
    d = _pder(coeffs)
    for _ in range(4 if B.extended else 2):
        dp = _pval(d, q)
        if dp == 0:
            break
        q = q - _pval(coeffs, q) / dp
    return q


def _root_value(B, root, V, c, omega):
    if root.is_real:
        return _polish_root(B, B.real(root.q.real), V, c, omega)
    return _polish_root(B, B.cplx(root.q), V, c, omega)


def _plane_spinor(q, V, c, omega):
    """(U, Vs, w, h) of a uniform-region plane wave, gauge phase stripped."""
    gn = c * c
    w = omega - V * q
    h = gn + q * q / 2
    return gn, w - h, w, h


def _plane_flux(q, V, c, omega):
    # J = v_g (|U|^2 - |Vs|^2) with |U|^2 - |Vs|^2 = 2 w (h - w): no cancellation
    _, _, w, h = _plane_spinor(q, V, c, omega)
    vg = V + (c * c * q + q**3 / 2) / w
    return vg * 2 * w * (h - w)


def _normalise(B, root, w0, J):
    if root.is_real:
        return _Mode(root.label, root.q, w0 / B.sqrt(abs(J)), 1.0 if J > 0 else -1.0)
    return _Mode(root.label, root.q, w0 / max(abs(v) for v in w0), None)


def _plane_mode(B, root, V, c, omega, beta):
    q = _root_value(B, root, V, c, omega)
    U, Vs, _, _ = _plane_spinor(q, V, c, omega)
    u0 = beta * U
    v0 = beta.conjugate() * Vs
    w0 = B.array([u0, v0, 1j * (V + q) * u0, 1j * (q - V) * v0])
    J = _plane_flux(q, V, c, omega) if root.is_real else None
    return _normalise(B, root, w0, J)


def _soliton_operator(B, q, V, kappa, omega):
    """10x6 matrix mapping (P0,P1,P2,Q0,Q1,Q2) to the residual coefficients."""
    k2 = kappa * kappa
    one_m_t2 = [1, 0, -1]
    W = [2 * V * V - 1, 0, 2 * k2]  # 2|phi|^2 - 1
    phi2 = [-V * V, -2j * V * kappa, k2]
    phic2 = [-V * V, 2j * V * kappa, k2]

    def D(p):
        return [kappa * v for v in _pmul(one_m_t2, _pder(p))]

    def eq(p, r, s, phi):
        # s = +1 for the u equation, -1 for the v equation
        Dp = D(p)
        DDp = D(Dp)
        Wp = _pmul(W, p)
        cr = _pmul(phi, r)
        return [q * q / 2 * p[k] - 1j * q * Dp[k] - DDp[k] / 2
                + s * (V * q * p[k] - 1j * V * Dp[k])
                + Wp[k] - s * omega * p[k] + cr[k] for k in range(5)]

    cols = []
    for k in range(6):
        e = [0] * 6
        e[k] = 1
        p, r = e[:3] + [0, 0], e[3:] + [0, 0]
        cols.append(eq(p, r, 1, phi2) + eq(r, p, -1, phic2))
    M = np.array(cols, dtype=object if B.extended else complex).T
    if B.extended:
        M = np.vectorize(B.cplx, otypes=[object])(M)
    return M


def _soliton_mode(B, root, bg: _Background, omega):
    V, kappa, t0 = bg.V_u, bg.kappa, bg.t0
    q = _root_value(B, root, V, bg.c_u, omega)
    c = B.null_vector(_soliton_operator(B, q, V, kappa, omega))
    pc, qc = list(c[:3]), list(c[3:])
    dt = kappa * (1 - t0 * t0)
    p0, q0 = _pval(pc, t0), _pval(qc, t0)
    dp0, dq0 = _pval(_pder(pc), t0) * dt, _pval(_pder(qc), t0) * dt
    w0 = B.array([p0, q0, 1j * (V + q) * p0 + dp0, 1j * (q - V) * q0 + dq0])
    J = None
    if root.is_real:
        # flux from the asymptotic (t -> -1) spinor against the uniform plane wave
        beta_u = -(kappa + 1j * V)
        U, Vs, _, _ = _plane_spinor(q, V, bg.c_u, omega)
        pa, qa = _pval(pc, -1), _pval(qc, -1)
        r0, r1 = beta_u * U, beta_u.conjugate() * Vs
        lam = (r0.conjugate() * pa + r1.conjugate() * qa) / (abs(r0) ** 2 + abs(r1) ** 2)
        J = abs(lam) ** 2 * _plane_flux(q, V, bg.c_u, omega)
    return _normalise(B, root, w0, J)


def _fix_phase(mode: _Mode) -> _Mode:
    u0 = mode.w0[0]
    if abs(u0) > 0:
        mode.w0 = mode.w0 * (abs(u0) / u0)
    return mode


def _upstream_modes(B, config: FlowConfig, bg: _Background, omega, guard: float):
    roots = channel_roots(config, Region.Upstream, float(omega), guard)
    wanted = (Label.In0, Label.Out0, Label.EvanescentDecayUp)
    if not bg.soliton:
        return {L: _plane_mode(B, find_root(roots, L), bg.V_u, bg.c_u, omega, B.cplx(1)) for L in wanted}
    modes = {L: _soliton_mode(B, find_root(roots, L), bg, omega) for L in wanted}
    if config.kind is FlowKind.DeltaPeak:
        for m in modes.values():
            m.w0 = m.w0 + B.array([0, 0, 2 * bg.Z * m.w0[0], 2 * bg.Z * m.w0[1]])
    return modes


def downstream_phase(config: FlowConfig) -> complex:
    """exp(i beta) of the downstream condensate at the origin."""
    return complex(_background(config, _F64()).beta_d)


def _downstream_modes(B, config: FlowConfig, bg: _Background, omega, guard: float, below: bool):
    roots = channel_roots(config, Region.Downstream, float(omega), guard)
    if below:
        wanted = (Label.In1, Label.Out1, Label.In2, Label.Out2)
    else:
        wanted = (Label.In1, Label.Out1, Label.EvanescentDecayDown)
    return {L: _plane_mode(B, find_root(roots, L), bg.V_d, bg.c_d, omega, bg.beta_d) for L in wanted}


def _match(B, up, down, below):
    cols = [up[Label.Out0].w0, up[Label.EvanescentDecayUp].w0, -down[Label.Out1].w0]
    cols.append(-down[Label.Out2].w0 if below else -down[Label.EvanescentDecayDown].w0)
    A = np.array(cols).T
    rhs = [-up[Label.In0].w0, down[Label.In1].w0]
    if below:
        rhs.append(down[Label.In2].w0)
    Bm = np.array(rhs).T
    # column equilibration before judging conditioning
    scale = np.array([max(abs(v) for v in A[:, j]) for j in range(A.shape[1])])
    An = A / scale
    cond = np.linalg.cond(np.array(An, dtype=complex))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise MatchingSingular(f"matching system condition number {cond:.3e}")
    X = B.solve(An, Bm) / scale[:, None]
    rows = [0, 2, 3] if below else [0, 2]
    S = np.array(X[rows], dtype=complex)
    return S, float(cond)


#: below this omega/Omega the extended-precision path is used by default
EXTENDED_BELOW = 0.01
EXTENDED_DPS = 32
AUTO_RESIDUAL = 1e-10


def smatrix(config: FlowConfig, omega: float, guard: float = THRESHOLD_GUARD,
            precision: str = "auto") -> ScatteringMatrix:
    """Scattering matrix at frequency ``omega`` (3x3 below threshold, 2x2 above).

    ``precision`` is ``"double"``, ``"extended"`` or ``"auto"``; the S entries
    grow like omega^(-1/2) at low frequency and the matching loses digits in
    proportion, so ``auto`` switches to mpmath arithmetic below
    ``EXTENDED_BELOW * Omega``, and also whenever the double-precision result
    misses ``AUTO_RESIDUAL`` (large m_d makes the matching ill-conditioned).
    """
    if not omega > 0:
        raise NonPositiveFrequency(f"omega must be positive, got {omega}")
    Om = threshold_omega(config)
    if abs(omega - Om) < guard * Om:
        raise ThresholdDegeneracy(f"omega={omega} within {guard:g}*Omega of the threshold")
    if precision == "auto":
        if omega < EXTENDED_BELOW * Om:
            return _smatrix(config, omega, Om, guard, "extended")
        S = _smatrix(config, omega, Om, guard, "double")
        if S.residual() > AUTO_RESIDUAL:
            S = _smatrix(config, omega, Om, guard, "extended")
        return S
    return _smatrix(config, omega, Om, guard, precision)


def _smatrix(config, omega, Om, guard, precision) -> ScatteringMatrix:
    B = _MP(EXTENDED_DPS) if precision == "extended" else _F64()
    bg = _background(config, B)
    w = B.real(omega)
    below = omega < Om
    up = {k: _fix_phase(m) for k, m in _upstream_modes(B, config, bg, w, guard).items()}
    down = {k: _fix_phase(m) for k, m in _downstream_modes(B, config, bg, w, guard, below).items()}
    S, cond = _match(B, up, down, below)
    return ScatteringMatrix(float(omega), S, config, Om,
                            {"cond": cond, "method": "exact-modes", "precision": precision})


# --------------------------------------------------------------------------
# independent cross-checks


def smatrix_transfer(config: FlowConfig, omega: float, x0: float) -> ScatteringMatrix:
    """Flat-profile S obtained by matching the plane waves at x = x0 instead of 0.

    The interface is still at the origin; only the point where the four
    continuity conditions are imposed moves (the plane waves are exact on each
    side, so for x0 != 0 they are propagated through the uniform slab first).
    Channel phases change, moduli must not.
    """
    if config.kind is not FlowKind.FlatProfile:
        raise ValueError("transfer recomputation is defined for the flat profile only")
    B = _F64()
    bg = _background(config, B)
    Om = threshold_omega(config)
    below = omega < Om

    def at(mode, q, V, x):
        ph = np.array([np.exp(1j * (V + q) * x), np.exp(1j * (q - V) * x)])
        u, v, du, dv = mode.w0
        return np.array([u * ph[0], v * ph[1], du * ph[0], dv * ph[1]])

    up = _upstream_modes(B, config, bg, omega, THRESHOLD_GUARD)
    down = _downstream_modes(B, config, bg, omega, THRESHOLD_GUARD, below)
    # the side that does not contain x0 is carried across the interface by
    # the 4x4 transfer matrix of the uniform region that does
    reg, V, c, beta = ((Region.Downstream, bg.V_d, bg.c_d, bg.beta_d) if x0 < 0
                       else (Region.Upstream, bg.V_u, bg.c_u, B.cplx(1)))
    full = [_plane_mode(B, r, V, c, omega, beta) for r in channel_roots(config, reg, omega)]
    basis = np.array([m.w0 for m in full]).T
    prop = np.array([at(m, complex(m.q), V, x0) for m in full]).T
    T = prop @ np.linalg.inv(basis)  # maps (u, v, u', v')(0) -> (u, v, u', v')(x0)
    for side in (up, down):
        for m in side.values():
            m.w0 = T @ m.w0
    S, cond = _match(B, up, down, below)
    return ScatteringMatrix(float(omega), S, config, Om, {"cond": cond, "method": "transfer", "x0": x0})


def smatrix_ode(config: FlowConfig, omega: float, L: float = 30.0, rtol: float = 1e-10,
                atol: float = 1e-12, step: float = 1.0) -> ScatteringMatrix:
    """S from direct integration of the BdG equations across the soliton region.

    Three admissible upstream solutions (in0, out0 and the evanescent mode
    decaying towards -inf) are launched as plane waves at x = -L and
    integrated to the origin.  Every ``step`` healing lengths the evanescent
    solution, which grows towards the origin, is renormalised and projected
    out of the two propagating ones so that they stay resolvable.
    """
    if config.kind is FlowKind.FlatProfile:
        raise ValueError("the flat profile has no inhomogeneous region to integrate")
    B = _F64()
    bg = _background(config, B)
    Om = threshold_omega(config)
    below = omega < Om
    V, kappa, x0 = bg.V_u, bg.kappa, config.soliton_offset
    roots = channel_roots(config, Region.Upstream, omega)
    labels = (Label.In0, Label.Out0, Label.EvanescentDecayUp)
    beta_u = -(kappa + 1j * V)

    # soliton-gauge initial data: u~ = e^{iqx} beta U, v~ = e^{iqx} beta* Vs
    y0 = []
    flux = []
    for L_ in labels:
        r = find_root(roots, L_)
        q = complex(r.q) if not r.is_real else r.q.real
        U, Vs, _, _ = _plane_spinor(q, V, 1.0, omega)
        e = np.exp(-1j * q * L)
        y0.append([beta_u * U * e, np.conj(beta_u) * Vs * e, 1j * q * beta_u * U * e, 1j * q * np.conj(beta_u) * Vs * e])
        flux.append(_plane_flux(q, V, 1.0, omega) if r.is_real else None)
    y = np.array(y0, dtype=complex)
    for k, J in enumerate(flux):
        y[k] /= math.sqrt(abs(J)) if J is not None else np.abs(y[k]).max()

    def rhs(x, Y):
        Y = Y.reshape(3, 4)
        t = math.tanh(kappa * (x - x0))
        n = V * V + kappa * kappa * t * t
        phi2 = (kappa * t - 1j * V) ** 2
        u, v, du, dv = Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3]
        ddu = 2 * (-1j * V * du + (2 * n - 1 - omega) * u + phi2 * v)
        ddv = 2 * (1j * V * dv + (2 * n - 1 + omega) * v + np.conj(phi2) * u)
        return np.stack([du, dv, ddu, ddv], axis=1).ravel()

    xs = np.arange(-L, 0.0, step)
    xs = np.append(xs, 0.0)
    for a, b in zip(xs[:-1], xs[1:]):
        sol = solve_ivp(rhs, (a, b), y.ravel(), method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise NoConvergence(sol.message)
        y = sol.y[:, -1].reshape(3, 4)
        ev = y[2]
        nrm = np.linalg.norm(ev)
        ev = ev / nrm
        for k in (0, 1):
            y[k] = y[k] - (np.vdot(ev, y[k])) * ev
        y[2] = ev

    up = {}
    for k, L_ in enumerate(labels):
        u, v, du, dv = y[k]
        w0 = np.array([u, v, du + 1j * V * u, dv - 1j * V * v])
        if config.kind is FlowKind.DeltaPeak:
            w0 = w0 + np.array([0, 0, 2 * bg.Z * w0[0], 2 * bg.Z * w0[1]])
        up[L_] = _fix_phase(_Mode(L_, None, w0, flux[k]))
    down = {k: _fix_phase(m) for k, m in _downstream_modes(B, config, bg, omega, THRESHOLD_GUARD, below).items()}
    S, cond = _match(B, up, down, below)
    return ScatteringMatrix(float(omega), S, config, Om, {"cond": cond, "method": "ode", "L": L})


def optical_model(S: ScatteringMatrix) -> OpticalModel:
    """Squeezing parameter and beam-splitter angle of the equivalent optical model."""
    if S.dim != 3:
        raise ModeAbsent("the optical model needs the 3x3 scattering matrix")
    s22 = abs(S[2, 2])
    sh2 = max(s22 * s22 - 1.0, 0.0)
    r2 = math.asinh(math.sqrt(sh2))
    ph = [float(np.angle(S[i, 2])) for i in range(3)]
    if sh2 == 0.0:
        return OpticalModel(0.0, None, None, None, *ph)
    g0 = abs(S[0, 2]) ** 2 / sh2
    g1 = abs(S[1, 2]) ** 2 / sh2
    # normalise away the (tiny) skew-unitarity residual so gamma0 + gamma1 = 1
    tot = g0 + g1
    g0, g1 = g0 / tot, g1 / tot
    theta = math.atan2(math.sqrt(g1), math.sqrt(g0))
    return OpticalModel(r2, theta, g0, g1, *ph)


def low_frequency_scaling(config: FlowConfig, lo: float = 1e-4, hi: float = 1e-2,
                          n: int = 9) -> tuple[np.ndarray, np.ndarray]:
    """Log-log fits of |S02|^2, |S12|^2, |S22|^2 against omega on [lo, hi]*Omega.

    Returns ``(slopes, prefactors)``, each of length 3, with
    |S_i2|^2 ~ prefactor_i * omega^slope_i.
    """
    if n < 3 or not (0 < lo < hi < 1):
        raise FitRange("need at least three points inside (0, Omega)")
    Om = threshold_omega(config)
    w = Om * np.geomspace(lo, hi, n)
    y = np.array([np.abs(smatrix(config, float(x)).entries[:, 2]) ** 2 for x in w])
    fits = np.polyfit(np.log(w), np.log(y), 1)
    return fits[0], np.exp(fits[1])
