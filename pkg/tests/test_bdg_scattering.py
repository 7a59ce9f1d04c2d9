import math

import numpy as np
import pytest

from bhbell.bdg_scattering import (ScatteringMatrix, low_frequency_scaling, optical_model, smatrix,
                                   smatrix_ode, smatrix_transfer)
from bhbell.dispersion import threshold_omega
from bhbell.errors import FitRange, ModeAbsent, NonPositiveFrequency, ThresholdDegeneracy
from bhbell.flow_config import FlowKind, build_config
from bhbell.gaussian_state import covariance, moments_at, ppt_measure, second_moments
from bhbell.pseudospin import three_mode_correlators

from conftest import all_configs

ETA = np.diag([1.0, 1.0, -1.0])


@pytest.mark.parametrize("c", all_configs(), ids=lambda c: c.label())
def test_skew_unitarity_and_column_relation(c):
    Om = threshold_omega(c)
    for w in np.geomspace(1e-4, 0.999, 30) * Om:
        S = smatrix(c, w)
        assert S.dim == 3
        M = S.entries
        assert np.abs(M.conj().T @ ETA @ M - ETA).max() < 1e-8
        assert np.abs(M @ ETA @ M.conj().T - ETA).max() < 1e-8
        assert abs(M[2, 2]) >= 1
        r2 = optical_model(S).r2
        assert abs(abs(M[0, 2]) ** 2 + abs(M[1, 2]) ** 2 - math.sinh(r2) ** 2) < 1e-8 * max(1, math.sinh(r2) ** 2)


@pytest.mark.parametrize("c", all_configs((0.3, 0.7)), ids=lambda c: c.label())
def test_unitary_above_threshold(c):
    Om = threshold_omega(c)
    for w in (1.01 * Om, 1.5 * Om, 3 * Om):
        S = smatrix(c, w)
        assert S.dim == 2
        M = S.entries
        assert np.abs(M.conj().T @ M - np.eye(2)).max() < 1e-8
        assert abs(abs(M[0, 0]) ** 2 + abs(M[1, 0]) ** 2 - 1) < 1e-8
        with pytest.raises(ModeAbsent):
            optical_model(S)


@pytest.mark.parametrize("m_u", [0.2, 0.587, 0.8])
def test_greybody_limit(m_u):
    c = build_config(FlowKind.Waterfall, m_u)
    S = smatrix(c, 1e-4 * threshold_omega(c))
    r2 = optical_model(S).r2
    ratio = abs(S[0, 2]) ** 2 / math.sinh(r2) ** 2
    assert abs(ratio / (4 * m_u / (1 + m_u) ** 2) - 1) < 0.01


def test_optical_model_reference(waterfall_ref):
    opt = optical_model(smatrix(waterfall_ref, 1e-4 * threshold_omega(waterfall_ref)))
    assert abs(opt.gamma0 - 4 * 0.587 / 1.587**2) < 2e-3
    assert abs(4 * 0.587 / 1.587**2 - 0.932) < 1e-3
    for w in np.geomspace(1e-3, 0.99, 12) * threshold_omega(waterfall_ref):
        o = optical_model(smatrix(waterfall_ref, w))
        assert abs(o.gamma0 + o.gamma1 - 1) < 1e-10
        assert 0 <= o.theta <= math.pi / 2
        assert abs(math.cos(o.theta) ** 2 - o.gamma0) < 1e-10


def test_optical_model_no_squeezing():
    S = ScatteringMatrix(0.3, np.eye(3, dtype=complex), None, 1.0)
    opt = optical_model(S)
    assert opt.r2 == 0.0 and opt.theta is None


@pytest.mark.parametrize("c", [build_config(FlowKind.Waterfall, 0.587),
                               build_config(FlowKind.FlatProfile, 0.5, 4.0),
                               build_config(FlowKind.DeltaPeak, 0.5)], ids=lambda c: c.label())
def test_low_frequency_scaling(c):
    slopes, pref = low_frequency_scaling(c)
    assert np.all(np.abs(slopes + 1) < 0.05)
    assert abs(slopes[0] - slopes[1]) < 0.02
    assert np.all(pref > 0)


def test_scaling_fit_range(waterfall_ref):
    with pytest.raises(FitRange):
        low_frequency_scaling(waterfall_ref, n=2)
    with pytest.raises(FitRange):
        low_frequency_scaling(waterfall_ref, lo=1e-2, hi=1e-4)


def test_errors(waterfall_ref):
    with pytest.raises(NonPositiveFrequency):
        smatrix(waterfall_ref, -1.0)
    with pytest.raises(ThresholdDegeneracy):
        smatrix(waterfall_ref, threshold_omega(waterfall_ref))


@pytest.mark.parametrize("m_u, m_d", [(0.5, 4.0), (0.3, 5.0), (0.7, 1.5)])
def test_flat_transfer_oracle(m_u, m_d):
    c = build_config(FlowKind.FlatProfile, m_u, m_d)
    Om = threshold_omega(c)
    for w in (1e-3 * Om, 0.3 * Om, 0.9 * Om, 1.4 * Om):
        a = smatrix(c, w)
        for x0 in (-1.3, 0.7):
            b = smatrix_transfer(c, w, x0)
            assert np.abs(np.abs(a.entries) - np.abs(b.entries)).max() < 1e-9


@pytest.mark.parametrize("kind", [FlowKind.Waterfall, FlowKind.DeltaPeak])
def test_ode_oracle(kind):
    c = build_config(kind, 0.5)
    Om = threshold_omega(c)
    for w in (0.05 * Om, 0.5 * Om):
        exact = np.abs(smatrix(c, w).entries)
        s30 = np.abs(smatrix_ode(c, w, L=30.0).entries)
        s60 = np.abs(smatrix_ode(c, w, L=60.0).entries)
        assert np.abs(s30 - s60).max() < 1e-7
        assert np.abs(s30 - exact).max() < 1e-6 * max(1.0, exact.max())


def test_phase_rotation_invariance(waterfall_ref, rng):
    c = waterfall_ref
    S = smatrix(c, 0.05 * threshold_omega(c))
    base = second_moments(S)
    d_out = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    d_in = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    S2 = ScatteringMatrix(S.omega, d_out @ S.entries @ d_in, S.config, S.Omega)
    rot = second_moments(S2)
    assert np.allclose(np.abs(S2.entries), np.abs(S.entries), atol=1e-14)
    assert abs(covariance(rot).delta - covariance(base).delta) < 1e-12
    for pair in ("02", "12", "01"):
        assert abs(ppt_measure(rot, pair) - ppt_measure(base, pair)) < 1e-10
    assert np.abs(three_mode_correlators(rot) - three_mode_correlators(base)).max() < 1e-10
    mt = moments_at(c, S.omega, 0.1)
    assert mt.nc0 > base.nc0
