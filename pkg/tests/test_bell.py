import math

import numpy as np
import pytest

from bhbell.bdg_scattering import optical_model, smatrix
from bhbell.bell import (GAParams, MeasurementFrame, analytic_frames, chsh_from_moments, chsh_optimal,
                         evaluate_population, ga_maximize, mermin_expectation, mermin_frames,
                         mermin_prime_expectation, svetlichny_expectation, svetlichny_reduced_max,
                         svetlichny_reduced_scan, svetlichny_square_spectrum, wxyz)
from bhbell.dispersion import threshold_omega
from bhbell.errors import NotConverged
from bhbell.gaussian_state import fbasis_moments, fmode_state, moments_at, ppt_measure, second_moments
from bhbell.pseudospin import three_mode_correlators, two_mode_correlators

from conftest import random_smatrix

SQRT2 = math.sqrt(2.0)
SMALL_GA = GAParams(population=60, restarts=2, max_generations=400)


def ghz_tensor(zzz=1.0, yyz=1.0, yzy=1.0, zyy=-1.0):
    """Three-qubit stabiliser tensor; only the four listed entries are nonzero."""
    T = np.zeros((3, 3, 3))
    T[2, 2, 2], T[1, 1, 2], T[1, 2, 1], T[2, 1, 1] = zzz, yyz, yzy, zyy
    return T


def random_frame(rng):
    v = rng.normal(size=(6, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_moments(rng):
    S = random_smatrix(rng)
    nbar = tuple(rng.exponential(0.5, 3))
    return second_moments(S, nbar)


# ---------------------------------------------------------------- CHSH

def test_chsh_product_state():
    T = np.diag([0.0, 0.0, 1.0])
    assert chsh_optimal(T).value == pytest.approx(2.0, abs=1e-12)
    assert chsh_optimal(T, "standard").value == pytest.approx(2.0, abs=1e-12)


def test_chsh_singlet_and_bad_basis():
    T = -np.eye(3)
    assert chsh_optimal(T).value == pytest.approx(2 * SQRT2, abs=1e-12)
    with pytest.raises(ValueError):
        chsh_optimal(T, "nope")


def test_chsh_rotation_invariant(rng):
    T = rng.uniform(-1, 1, (3, 3))
    Q1, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    Q2, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert chsh_optimal(Q1 @ T @ Q2.T).value == pytest.approx(chsh_optimal(T).value, abs=1e-12)


@pytest.mark.parametrize("w", [0.01, 0.1, 0.5, 0.9])
def test_fbasis_pure_pair_closed_form(waterfall_ref, w):
    S = smatrix(waterfall_ref, w * threshold_omega(waterfall_ref))
    r2 = optical_model(S).r2
    expected = 2 * math.sqrt(1 + (4 / math.pi**2) * math.atan(math.sinh(2 * r2)) ** 2)
    assert fmode_state(S).B_f == pytest.approx(expected, abs=1e-9)


def test_chsh_from_moments_pairs(waterfall_ref):
    mom = moments_at(waterfall_ref, 0.05 * threshold_omega(waterfall_ref), 0.0)
    for pair in ("02", "12"):
        res = chsh_from_moments(mom, pair)
        assert res.value <= res.diagnostics["c_basis"] + 1e-12
        assert res.value <= 2 * SQRT2 + 1e-9
    # the standard-form value is the c-basis optimum restricted to the x-z plane
    Ts = two_mode_correlators(mom, "02", "standard")
    assert chsh_from_moments(mom, "02").value == pytest.approx(2 * math.hypot(Ts[0, 0], Ts[2, 2]), abs=1e-12)


def test_chsh_needs_entanglement(rng):
    for _ in range(60):
        mom = random_moments(rng)
        for pair in ("02", "12", "01"):
            if ppt_measure(mom, pair) <= 0:
                assert chsh_from_moments(mom, pair).value <= 2 + 1e-9


# ---------------------------------------------------------------- frames and expectations

def test_frame_vectors_unit_norm(rng):
    angles = rng.uniform(-4, 4, 12)
    v = MeasurementFrame(angles).vectors
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
    back = MeasurementFrame.from_vectors(v).vectors
    assert np.allclose(back, v, atol=1e-12)


def test_all_x_frame_is_zero_on_ghz():
    frame = np.tile([1.0, 0.0, 0.0], (6, 1))
    assert svetlichny_expectation(ghz_tensor(), frame) == 0.0
    assert mermin_expectation(ghz_tensor(), frame) == 0.0


def test_mermin_frame_reaches_four():
    ez, ey = np.array([0, 0, 1.0]), np.array([0, 1.0, 0])
    frame = np.array([ez, ey, ey, ez, ey, ez])
    assert mermin_expectation(ghz_tensor(), frame) == pytest.approx(4.0, abs=1e-12)
    assert max(mermin_expectation(ghz_tensor(), f) for f in mermin_frames()) == pytest.approx(4.0, abs=1e-12)


def test_literal_svetlichny_frame():
    # a+ = b = c' = e_z, a- = -b' = -c = e_y, theta = pi/4
    ez, ey = np.array([0, 0, 1.0]), np.array([0, 1.0, 0])
    a = (ez + ey) / SQRT2
    ap = (ez - ey) / SQRT2
    frame = np.array([a, ap, ez, -ey, -ey, ez])
    alt = ghz_tensor(zzz=1, yyz=-1, yzy=1, zyy=1)
    assert svetlichny_expectation(alt, frame) == pytest.approx(2 * SQRT2, abs=1e-12)
    assert wxyz(alt, ez, ey, ez, -ey, -ey, ez) == pytest.approx((1, 1, -1, 1))
    # the other sign pattern needs one of the mode-flipped variants
    assert svetlichny_expectation(ghz_tensor(), frame) == pytest.approx(0.0, abs=1e-12)
    assert svetlichny_reduced_scan(ghz_tensor()) == pytest.approx(2 * SQRT2, abs=1e-12)
    assert len(list(analytic_frames())) == 8


def test_svetlichny_is_mean_of_mermins(rng):
    T = three_mode_correlators(random_moments(rng))
    for _ in range(20):
        f = random_frame(rng)
        s = svetlichny_expectation(T, f)
        assert s == pytest.approx(0.5 * mermin_expectation(T, f) + 0.5 * mermin_prime_expectation(T, f), abs=1e-12)


def test_reduced_max():
    assert svetlichny_reduced_max(1, 1, -1, 1) == pytest.approx(2 * SQRT2, abs=1e-14)
    assert svetlichny_reduced_max(0, 0, 0, 0) == 0.0
    th = np.linspace(0, 2 * np.pi, 20001)
    W, X, Y, Z = 0.3, -0.7, 0.2, 0.9
    brute = np.max((W + Z) * np.cos(th) + (X - Y) * np.sin(th))
    assert svetlichny_reduced_max(W, X, Y, Z) == pytest.approx(brute, abs=1e-6)


def test_square_spectrum_bounds(rng):
    for _ in range(200):
        ev = svetlichny_square_spectrum(*rng.uniform(-np.pi, np.pi, 3))
        assert ev.min() >= -1e-12 and ev.max() <= 8 + 1e-12
    assert svetlichny_square_spectrum(np.pi / 2, np.pi / 2, np.pi / 2).max() == pytest.approx(8.0)


def test_evaluate_population_matches_scalar(rng):
    T = three_mode_correlators(random_moments(rng))
    angles = rng.uniform(-3, 3, (25, 12))
    vals = evaluate_population(T, angles, "svetlichny")
    ref = [svetlichny_expectation(T, MeasurementFrame(a)) for a in angles]
    assert np.allclose(vals, ref, atol=1e-12)
    valsm = evaluate_population(T, angles, "mermin")
    refm = [mermin_expectation(T, MeasurementFrame(a)) for a in angles]
    assert np.allclose(valsm, refm, atol=1e-12)


# ---------------------------------------------------------------- GA

def test_ga_finds_ideal_optima():
    assert ga_maximize(ghz_tensor(), "svetlichny", SMALL_GA).value == pytest.approx(2 * SQRT2, abs=1e-8)
    assert ga_maximize(ghz_tensor(), "mermin", SMALL_GA).value == pytest.approx(4.0, abs=1e-8)


def test_ga_unseeded_finds_ideal_optimum():
    p = GAParams(population=80, restarts=4, seed_analytic=False)
    assert ga_maximize(ghz_tensor(), "svetlichny", p, seed=3).value == pytest.approx(2 * SQRT2, abs=1e-6)


def test_ga_frame_reproduces_value(rng):
    T = three_mode_correlators(random_moments(rng))
    res = ga_maximize(T, "svetlichny", SMALL_GA, seed=5)
    assert svetlichny_expectation(T, res.frame) == pytest.approx(res.value, abs=1e-12)
    assert np.allclose(np.linalg.norm(res.frame.vectors, axis=1), 1.0)
    assert res.restarts == SMALL_GA.restarts and res.seed == 5


def test_ga_not_below_reduced_scan(waterfall_ref):
    for w in (1e-3, 0.05, 0.5):
        T = three_mode_correlators(moments_at(waterfall_ref, w * threshold_omega(waterfall_ref), 0.0))
        assert ga_maximize(T, "svetlichny", SMALL_GA).value >= svetlichny_reduced_scan(T) - 1e-6


def test_ga_deterministic(rng):
    T = three_mode_correlators(random_moments(rng))
    a = ga_maximize(T, "mermin", SMALL_GA, seed=11)
    b = ga_maximize(T, "mermin", SMALL_GA, seed=11)
    assert a.value == b.value
    assert np.array_equal(a.frame.angles, b.frame.angles)


def test_ga_threads_do_not_change_result(rng):
    T = three_mode_correlators(random_moments(rng))
    a = ga_maximize(T, "svetlichny", SMALL_GA, seed=2, threads=1)
    b = ga_maximize(T, "svetlichny", SMALL_GA, seed=2, threads=2)
    assert a.value == b.value


def test_ga_seed_robustness(waterfall_ref):
    T = three_mode_correlators(moments_at(waterfall_ref, 0.05 * threshold_omega(waterfall_ref), 0.0))
    p = GAParams(restarts=3)
    vals = [ga_maximize(T, "svetlichny", p, seed=s).value for s in range(20)]
    assert max(vals) - min(vals) < 1e-4


def test_ga_strict_not_converged():
    p = GAParams(population=20, restarts=1, max_generations=3, polish=False)
    with pytest.raises(NotConverged) as exc:
        ga_maximize(ghz_tensor(), "svetlichny", p, strict=True)
    assert exc.value.result.converged is False
    assert ga_maximize(ghz_tensor(), "svetlichny", p).converged is False


def test_ga_custom_weights_equal_named():
    from bhbell.bell import MERMIN_WEIGHTS

    a = ga_maximize(ghz_tensor(), MERMIN_WEIGHTS, SMALL_GA, seed=1)
    b = ga_maximize(ghz_tensor(), "mermin", SMALL_GA, seed=1)
    assert a.value == pytest.approx(b.value, abs=1e-12)


# ---------------------------------------------------------------- bounds

def test_bound_suite(rng):
    for _ in range(100):
        mom = random_moments(rng)
        for pair in ("02", "12", "01"):
            assert chsh_from_moments(mom, pair).value <= 2 * SQRT2 + 1e-9
        T = three_mode_correlators(mom)
        p = GAParams(population=60, restarts=1, max_generations=300, polish=False)
        assert ga_maximize(T, "svetlichny", p).value <= 2 * SQRT2 + 1e-9
        assert ga_maximize(T, "mermin", p).value <= 4 + 1e-9


# ---------------------------------------------------------------- physics

def fbasis_tensor(flow, w, T=0.0):
    S = smatrix(flow, w * threshold_omega(flow))
    me = moments_at(flow, S.omega, T, phases="e", S=S)
    return three_mode_correlators(fbasis_moments(me, optical_model(S).theta)), S


@pytest.mark.parametrize("w", [1e-3, 0.1])
def test_fbasis_svetlichny_is_two(waterfall_ref, w):
    T, _ = fbasis_tensor(waterfall_ref, w)
    assert ga_maximize(T, "svetlichny", SMALL_GA).value == pytest.approx(2.0, abs=1e-6)


def test_fbasis_mermin_equals_pair_chsh(waterfall_ref):
    # f0 is in its vacuum, so the tensor factorises as e_z (x) T12 and the
    # Mermin optimum reduces to the CHSH optimum of the (f1|f2) pair
    T, S = fbasis_tensor(waterfall_ref, 1e-2)
    assert np.allclose(T[:2], 0.0, atol=1e-12)
    assert ga_maximize(T, "mermin", SMALL_GA).value == pytest.approx(fmode_state(S).B_f, abs=1e-6)


def test_fbasis_mermin_long_wavelength_value(waterfall_ref):
    # documented example: M_f -> 2 at omega -> 0, T = 0
    T, _ = fbasis_tensor(waterfall_ref, 1e-4)
    assert ga_maximize(T, "mermin", SMALL_GA).value == pytest.approx(2.0, abs=1e-3)


def test_violation_at_low_frequency(waterfall_ref):
    T = three_mode_correlators(moments_at(waterfall_ref, 1e-3 * threshold_omega(waterfall_ref), 0.0))
    assert ga_maximize(T, "svetlichny", SMALL_GA).value > 2.0
    assert ga_maximize(T, "mermin", SMALL_GA).value > 2 * SQRT2


def test_thermal_tensor_vanishes_at_low_frequency(waterfall_ref):
    vals = []
    for w in (1e-2, 1e-3, 1e-4):
        T = three_mode_correlators(moments_at(waterfall_ref, w * threshold_omega(waterfall_ref), 0.1))
        vals.append(ga_maximize(T, "svetlichny", SMALL_GA).value)
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.05
