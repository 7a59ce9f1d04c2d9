import math

import numpy as np
import pytest

from bhbell.bdg_scattering import ScatteringMatrix, smatrix
from bhbell.dispersion import threshold_omega
from bhbell.errors import QuadratureFailure
from bhbell.gaussian_state import SecondMoments, covariance, covariance_sigma, moments_at, reduced, second_moments
from bhbell.pseudospin import (AXES, GHZ_OPERATORS, _fock_amplitudes, _half_line_overlaps, correlator_tensor,
                               fock_moments, fock_oracle_correlator, fock_oracle_state, fock_oracle_tensor,
                               ghz_eigenrelation_check, hermite_functions, phase_space_correlator,
                               phase_space_tensor, pseudospin_matrix, three_mode_correlators, two_mode_correlators)

from conftest import random_smatrix


def squeezer(r, theta=0.4):
    """Beam splitter on modes 0, 1 after a 1-2 two-mode squeezer."""
    sq = np.eye(3, dtype=complex)
    sq[1:, 1:] = [[math.cosh(r), math.sinh(r)], [math.sinh(r), math.cosh(r)]]
    bs = np.eye(3, dtype=complex)
    bs[:2, :2] = [[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]]
    return ScatteringMatrix(0.1, bs @ sq, None, 1.0)


# ---------------------------------------------------------------- matrices

def test_hermite_orthonormal():
    x, w = np.polynomial.hermite.hermgauss(150)
    psi = hermite_functions(60, x) * np.exp(0.5 * x * x)
    G = (psi * w) @ psi.T
    assert np.abs(G - np.eye(61)).max() < 1e-10


def test_pseudospin_structure():
    n = 80
    Px, Py, Pz = (pseudospin_matrix(a, n) for a in AXES)
    assert Pz[0, 0] == 1
    assert np.array_equal(np.diag(Pz).real, (-1.0) ** np.arange(n + 1))
    assert np.abs(Px - Px.conj().T).max() < 1e-14
    assert np.abs(Py - Py.conj().T).max() < 1e-14
    assert np.abs(Py - 1j * Px @ Pz).max() < 1e-14
    # Pi_x only connects states of opposite parity
    idx = np.arange(n + 1)
    assert np.all(Px[(idx[:, None] + idx[None, :]) % 2 == 0] == 0)
    assert abs(Px[0, 1] - math.sqrt(2 / math.pi)) < 1e-13


def test_pseudospin_square_lower_block():
    n = 80
    Px, Py, Pz = (pseudospin_matrix(a, n) for a in AXES)
    k = n // 2
    low = slice(0, k)
    eye = np.eye(k)
    assert np.abs((Px @ Px)[low, low] - eye).max() < 1e-6
    assert np.abs((Px @ Py)[low, low] - 1j * Pz[low, low]).max() < 1e-6


def test_pseudospin_square_converges():
    """The truncated Pi_x^2 approaches the identity like n_max^(-1/2)."""
    ns = np.array([40, 80, 160, 320])
    err = []
    for n in ns:
        Px = pseudospin_matrix("x", n)
        k = n // 2
        err.append(np.abs((Px @ Px)[:k, :k] - np.eye(k)).max())
    slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
    assert abs(slope + 0.5) < 0.05
    assert np.all(np.diff(err) < 0)


def test_quadrature_failure():
    with pytest.raises(QuadratureFailure):
        _half_line_overlaps(60, 12)


# ---------------------------------------------------------------- two-mode

def test_two_mode_pure_pair():
    r = 0.9
    a = math.cosh(2 * r)
    mom = SecondMoments(0.1, 0.0, math.sinh(r) ** 2, 0.0, math.sinh(r) ** 2, 0j, 0.5 * math.sinh(2 * r) + 0j, 0j)
    assert abs(mom.a[0] - a) < 1e-12
    T = two_mode_correlators(mom, "02")
    assert abs(T[2, 2] - 1) < 1e-12


def test_two_mode_uncorrelated():
    mom = SecondMoments(0.1, 0.2, 0.3, 0.7, 1.1, 0j, 0j, 0j)
    a = mom.a
    for i in (0, 1):
        T = two_mode_correlators(mom, (i, 2))
        assert np.allclose(T, np.diag([0, 0, 1 / (a[i] * a[2])]), atol=1e-15)


def test_two_mode_zero_pattern_and_oracle(waterfall_ref):
    c = waterfall_ref
    for T in (0.0, 0.1):
        for w in (0.01, 0.2, 0.7):
            mom = moments_at(c, w * threshold_omega(c), T)
            sigma = covariance_sigma(mom)
            for pair in ((0, 2), (1, 2), (0, 1)):
                M = two_mode_correlators(mom, pair)
                for r in range(2):
                    assert M[2, r] == pytest.approx(0, abs=1e-12) and M[r, 2] == pytest.approx(0, abs=1e-12)
                assert np.all(np.abs(M) <= 1 + 1e-12)
                pinned = phase_space_correlator(reduced(sigma, pair), "zz")
                assert abs(M[2, 2] - pinned) < 1e-9
                assert np.abs(M - phase_space_tensor(reduced(sigma, pair))).max() < 1e-9


def test_standard_form_diagonal(waterfall_ref):
    c = waterfall_ref
    mom = moments_at(c, 0.3 * threshold_omega(c), 0.05, phases="raw")
    for pair in ("02", "12"):
        T = two_mode_correlators(mom, pair, basis="standard")
        assert np.abs(T - np.diag(np.diag(T))).max() < 1e-14
        assert T[0, 0] > 0


# ---------------------------------------------------------------- three-mode

def test_three_mode_matches_phase_space(rng):
    for _ in range(40):
        mom = second_moments(random_smatrix(rng, r_max=1.5), rng.exponential(0.4, 3), phases="raw")
        T = three_mode_correlators(mom)
        assert np.abs(T - phase_space_tensor(covariance_sigma(mom))).max() < 1e-9
        assert np.all(np.abs(T) <= 1 + 1e-12)
        assert abs(T[2, 2, 2] - 1 / covariance(mom).delta) < 1e-9


def test_three_mode_zero_pattern(waterfall_ref, rng):
    mom = second_moments(random_smatrix(rng), rng.exponential(0.4, 3), phases="raw")
    T = three_mode_correlators(mom)
    for idx in np.ndindex(3, 3, 3):
        nz = sum(k == 2 for k in idx)
        if nz in (0, 2):
            assert T[idx] == 0


def test_three_mode_permutation_consistency(rng):
    for _ in range(10):
        m = second_moments(random_smatrix(rng), rng.exponential(0.4, 3), phases="raw")
        swapped = SecondMoments(m.omega, m.temperature, m.nc1, m.nc0, m.nc2, np.conj(m.m01), m.m12, m.m02)
        T = three_mode_correlators(m)
        assert np.abs(three_mode_correlators(swapped) - T.transpose(1, 0, 2)).max() < 1e-9


def test_zero_temperature_tzzz(waterfall_ref):
    c = waterfall_ref
    for w in np.geomspace(1e-3, 0.99, 10) * threshold_omega(c):
        assert abs(three_mode_correlators(moments_at(c, w, 0.0))[2, 2, 2] - 1) < 1e-9


def test_long_wavelength_sign_pattern(waterfall_ref):
    """T_zzz = T_yyz = T_yzy = -T_zyy -> 1: deviations shrink as a power of omega."""
    c = waterfall_ref
    y, z = 1, 2
    ws = np.array([1e-2, 1e-3, 1e-4])
    devs = []
    for w in ws:
        T = three_mode_correlators(moments_at(c, w * threshold_omega(c), 0.0))
        vals = np.array([T[z, z, z], T[y, y, z], T[y, z, y], -T[z, y, y]])
        assert np.all(vals > 0)
        devs.append(np.max(1 - vals))
    assert devs[0] > devs[1] > devs[2]
    assert np.polyfit(np.log(ws), np.log(devs), 1)[0] > 0.3


def test_finite_temperature_tensor_vanishes(waterfall_ref):
    c = waterfall_ref
    T = three_mode_correlators(moments_at(c, 1e-4 * threshold_omega(c), 0.1))
    assert np.abs(T).max() < 1e-2


def test_correlator_tensor_bundle(waterfall_ref):
    mom = moments_at(waterfall_ref, 0.2 * threshold_omega(waterfall_ref), 0.0)
    ct = correlator_tensor(mom)
    assert set(ct.two_mode) == {"02", "12", "01"}
    assert ct.three_mode.shape == (3, 3, 3)


# ---------------------------------------------------------------- Fock oracle

def test_fock_amplitudes_structure():
    S = squeezer(1.5)
    s22 = abs(S[2, 2])
    X02, X12 = S[0, 2] / s22, S[1, 2] / s22
    amp = _fock_amplitudes(X02, X12, s22, 40)
    assert abs(amp[0, 0] - 1 / s22) < 1e-15
    assert abs(amp[2, 1] - math.sqrt(3) * X02**2 * X12 / s22) < 1e-14
    M, N = np.meshgrid(np.arange(41), np.arange(41), indexing="ij")
    assert np.all(amp[M + N > 40] == 0)


def test_fock_norm_convergence():
    S = squeezer(1.5)
    mom = second_moments(S, phases="raw")
    a = fock_oracle_state(S, mom, n_start=40, n_cap=40)
    b = fock_oracle_state(S, mom, n_start=80, n_cap=80)
    assert a.captured_norm > 0.999
    assert abs(a.captured_norm - b.captured_norm) < 1e-6


def test_fock_norm_geometric_tail():
    """Mode 2 is thermal with ratio tanh^2 r: the lost norm is tanh^(2(n+1)) r exactly."""
    for r in (0.5, 1.5, 2.0):
        S = squeezer(r)
        mom = second_moments(S, phases="raw")
        for n in (40, 80):
            st = fock_oracle_state(S, mom, n_start=n, n_cap=n, min_norm=0.0)
            assert abs((1 - st.captured_norm) - math.tanh(r) ** (2 * (n + 1))) < 1e-13


def test_fock_moments_match_gaussian():
    S = squeezer(1.5)
    mom = second_moments(S, phases="raw")
    b = fock_oracle_state(S, mom, n_start=160, n_cap=160)
    # moments of the truncated state reproduce the Gaussian ones
    fm = fock_moments(b)
    assert abs(fm["nc2"] - fm["nc0"] - fm["nc1"]) < 1e-12
    assert abs(fm["nc0"] - mom.nc0) < 1e-6 and abs(fm["nc2"] - mom.nc2) < 1e-6
    assert abs(fm["m02"] - mom.m02) < 1e-6 and abs(fm["m12"] - mom.m12) < 1e-6


def test_fock_correlators(waterfall_ref):
    c = waterfall_ref
    S = smatrix(c, 0.1 * threshold_omega(c))
    mom = second_moments(S)
    st = fock_oracle_state(S, mom, n_start=60, n_cap=60)
    assert abs(fock_oracle_correlator(st, "zzz") - 1) <= 2 * (1 - st.captured_norm) + 1e-12
    assert abs(fock_oracle_correlator(st, "xxx")) < 1e-3
    T = three_mode_correlators(mom)
    assert abs(fock_oracle_correlator(st, "yyz") - T[1, 1, 2]) < 1e-3


def test_fock_tensor_matches_closed_form(rng):
    for _ in range(2):
        S = random_smatrix(rng, r_max=1.2)
        mom = second_moments(S, phases="raw")
        Tf, st = fock_oracle_tensor(S, mom)
        assert np.abs(Tf - three_mode_correlators(mom)).max() < 1e-3


def test_numpy_and_numba_contractions_agree(rng):
    from bhbell import _kernels

    S = squeezer(0.8)
    st = fock_oracle_state(S, second_moments(S, phases="raw"), n_start=30, n_cap=30)
    A, B, C = (pseudospin_matrix(a, 30) for a in "yxz")
    assert abs(_kernels.fock_contract(st.amp, A, B, C) - _kernels.fock_contract_numpy(st.amp, A, B, C)) < 1e-12


# ---------------------------------------------------------------- GHZ

def test_ghz_signs_and_high_frequency(waterfall_ref):
    assert tuple(s for _, s in GHZ_OPERATORS) == (1, 1, -1, 1)
    c = waterfall_ref
    S = smatrix(c, 0.5 * threshold_omega(c))
    rep = ghz_eigenrelation_check(fock_oracle_state(S, second_moments(S)))
    assert rep.signs == (1, 1, -1, 1) and rep.method == "fock"
    assert min(rep.residuals[:3]) > 0.3
    assert rep.residuals[3] < 1e-6  # zzz is exactly +1 at T = 0


def test_ghz_residuals_decrease(waterfall_ref):
    c = waterfall_ref
    res = [ghz_eigenrelation_check(moments_at(c, w * threshold_omega(c), 0.0)).residuals
           for w in (1e-2, 1e-3, 1e-4)]
    res = np.array(res)
    assert np.all(np.diff(res[:, :3], axis=0) < 0)


def test_ghz_fock_and_analytic_agree(waterfall_ref):
    c = waterfall_ref
    S = smatrix(c, 0.2 * threshold_omega(c))
    mom = second_moments(S)
    a = ghz_eigenrelation_check(mom)
    f = ghz_eigenrelation_check(fock_oracle_state(S, mom, n_start=80))
    assert np.allclose(a.expectations, f.expectations, atol=1e-4)
