"""Bell functionals: analytic CHSH optimum, Svetlichny and Mermin parameters, GA search.

Frames are stored as twelve spherical angles (theta, phi) for the unit vectors
a, a', b, b', c, c' (in that order).  The three-mode expectation of a product
of pseudo-spin projections is sum_{rst} a_r b_s c_t T_rst.

Svetlichny:  S = 1/2 [(a + a') b c' + (a - a') b' c' + (a' + a) b' c + (a' - a) b c]
Mermin:      M = -a b c + a b' c' + a' b c' + a' b' c
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import NotConverged

SQRT2 = math.sqrt(2.0)

#: weights W[i, j, k] of the terms T(a_i, b_j, c_k); index 1 means primed
SVETLICHNY_WEIGHTS = 0.5 * np.array(
    [[[-1.0, 1.0], [1.0, 1.0]],
     [[1.0, 1.0], [1.0, -1.0]]]
)
MERMIN_WEIGHTS = np.array(
    [[[-1.0, 0.0], [0.0, 1.0]],
     [[0.0, 1.0], [1.0, 0.0]]]
)
# Mermin with primed and unprimed settings exchanged
MERMIN_PRIME_WEIGHTS = np.array(
    [[[0.0, 1.0], [1.0, 0.0]],
     [[1.0, 0.0], [0.0, -1.0]]]
)
_WEIGHTS = {"svetlichny": SVETLICHNY_WEIGHTS, "mermin": MERMIN_WEIGHTS}


@dataclass(frozen=True)
class MeasurementFrame:
    angles: np.ndarray  # (12,) theta/phi pairs for a, a', b, b', c, c'

    @property
    def vectors(self) -> np.ndarray:
        return _kernels.angles_to_vectors(np.asarray(self.angles))

    @classmethod
    def from_vectors(cls, vecs) -> "MeasurementFrame":
        vecs = np.asarray(vecs, dtype=float).reshape(6, 3)
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        th = np.arccos(np.clip(vecs[:, 2], -1.0, 1.0))
        ph = np.arctan2(vecs[:, 1], vecs[:, 0])
        return cls(np.column_stack([th, ph]).ravel())


@dataclass
class BellResult:
    kind: str
    value: float
    frame: MeasurementFrame | None = None
    generations: int = 0
    restarts: int = 0
    converged: bool = True
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# CHSH


def chsh_optimal(T: np.ndarray, basis: str = "c", pair=None) -> BellResult:
    """Maximal CHSH value for a two-mode correlation matrix.

    ``basis='c'``: 2 sqrt(lambda1 + lambda2) over the two largest eigenvalues
    of T^T T.  ``basis='standard'``: 2 sqrt(T_xx^2 + T_zz^2) for a matrix
    already in standard form.
    """
    T = np.asarray(T, dtype=float)
    if basis == "c":
        lam = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
        val = 2.0 * math.sqrt(max(lam[0] + lam[1], 0.0))
    elif basis == "standard":
        val = 2.0 * math.sqrt(T[0, 0] ** 2 + T[2, 2] ** 2)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    kind = "CHSH" if pair is None else f"CHSH({pair})"
    return BellResult(kind, val, diagnostics={"basis": basis})


def chsh_from_moments(mom, pair) -> BellResult:
    """Reported CHSH value B^(i|j): standard form for (i|2), c-basis otherwise.

    The c-basis value is kept in ``diagnostics['c_basis']``.
    """
    from .pseudospin import _pair, two_mode_correlators

    i, j = _pair(pair)
    Tc = two_mode_correlators(mom, (i, j), "c")
    rc = chsh_optimal(Tc, "c", pair=f"{i}|{j}")
    if (i, j) in ((0, 2), (1, 2)):
        rs = chsh_optimal(two_mode_correlators(mom, (i, j), "standard"), "standard", pair=f"{i}|{j}")
        rs.diagnostics["c_basis"] = rc.value
        return rs
    rc.diagnostics["c_basis"] = rc.value
    return rc


# --------------------------------------------------------------------------
# tripartite functionals


def triple(T: np.ndarray, a, b, c) -> float:
    return float(np.einsum("rst,r,s,t->", T, a, b, c))


def _vecs(frame) -> np.ndarray:
    if isinstance(frame, MeasurementFrame):
        return frame.vectors
    return np.asarray(frame, dtype=float).reshape(6, 3)


def svetlichny_expectation(T: np.ndarray, frame) -> float:
    a, ap, b, bp, c, cp = _vecs(frame)
    return 0.5 * (triple(T, a + ap, b, cp) + triple(T, a - ap, bp, cp)
                  + triple(T, ap + a, bp, c) + triple(T, ap - a, b, c))


def mermin_expectation(T: np.ndarray, frame) -> float:
    a, ap, b, bp, c, cp = _vecs(frame)
    return -triple(T, a, b, c) + triple(T, a, bp, cp) + triple(T, ap, b, cp) + triple(T, ap, bp, c)


def mermin_prime_expectation(T: np.ndarray, frame) -> float:
    """Mermin operator with every setting swapped (a <-> a', ...)."""
    a, ap, b, bp, c, cp = _vecs(frame)
    return mermin_expectation(T, np.array([ap, a, bp, b, cp, c]))


def svetlichny_reduced_max(W: float, X: float, Y: float, Z: float) -> float:
    """max over theta of (W + Z) cos(theta) + (X - Y) sin(theta)."""
    return math.hypot(W + Z, X - Y)


def wxyz(T: np.ndarray, a_plus, a_minus, b, b_prime, c, c_prime) -> tuple[float, float, float, float]:
    return (triple(T, a_plus, b, c_prime), triple(T, a_minus, b_prime, c_prime),
            triple(T, a_minus, b, c), triple(T, a_plus, b_prime, c))


def _flip_y(v, on: bool):
    v = np.array(v, dtype=float)
    if on:
        v[:2] *= -1.0
    return v


def analytic_frames():
    """The long-wavelength optimal frame and its images under pi rotations about z.

    Yields (a_plus, a_minus, b, b', c, c') with a_+ = b = c' = e_z and
    a_- = -b' = -c = e_y, then with the transverse components of mode 0, 1
    or 2 reversed.  Together they cover every sign convention of the modes.
    """
    ez, ey = np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])
    for f0 in (False, True):
        for f1 in (False, True):
            for f2 in (False, True):
                yield (_flip_y(ez, f0), _flip_y(ey, f0), _flip_y(ez, f1), _flip_y(-ey, f1),
                       _flip_y(-ey, f2), _flip_y(ez, f2))


def svetlichny_reduced_scan(T: np.ndarray) -> float:
    """Best reduced-form value over the analytic frames (a semi-analytic lower bound)."""
    return max(svetlichny_reduced_max(*wxyz(T, *fr)) for fr in analytic_frames())


def _frame_from_reduced(T, ap_, am_, b, bp, c, cp) -> np.ndarray:
    W, X, Y, Z = wxyz(T, ap_, am_, b, bp, c, cp)
    th = math.atan2(X - Y, W + Z)
    a = math.cos(th) * ap_ + math.sin(th) * am_
    a_p = math.cos(th) * ap_ - math.sin(th) * am_
    return np.array([a, a_p, b, bp, c, cp])


def mermin_frames():
    """a = b' = c' = e_z, a' = b = c = e_y and its pi-rotated images."""
    ez, ey = np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0])
    for f0 in (False, True):
        for f1 in (False, True):
            for f2 in (False, True):
                yield np.array([ez, _flip_y(ey, f0), _flip_y(ey, f1), ez, _flip_y(ey, f2), ez])


def svetlichny_square_spectrum(theta_a: float, theta_b: float, theta_c: float) -> np.ndarray:
    """Eigenvalues of the squared Svetlichny operator for in-plane settings.

    The operator is diagonal in the product Pi_z basis; see module docstring.
    """
    ca, cb, cc = math.cos(theta_a), math.cos(theta_b), math.cos(theta_c)
    sa, sb, sc = math.sin(theta_a), math.sin(theta_b), math.sin(theta_c)
    out = []
    for z0 in (1, -1):
        for z1 in (1, -1):
            for z2 in (1, -1):
                out.append(2 + 2 * ca * cb * cc + 2 * sa * sb * z0 * z1 + 2 * sb * sc * z1 * z2 + 2 * sa * sc * z0 * z2)
    return np.array(out)


# --------------------------------------------------------------------------
# genetic algorithm


@dataclass(frozen=True)
class GAParams:
    population: int = 200
    elite_fraction: float = 0.1
    sigma0: float = 0.6
    stagnation: int = 15
    restarts: int = 20
    delta: float = 1e-8
    min_sigma: float = 1e-5
    max_generations: int = 4000
    polish: bool = True
    seed_analytic: bool = True


def _weights(objective) -> np.ndarray:
    if isinstance(objective, str):
        return _WEIGHTS[objective.lower()]
    return np.asarray(objective, dtype=float).reshape(2, 2, 2)


def evaluate_population(T: np.ndarray, angles: np.ndarray, objective="svetlichny") -> np.ndarray:
    """Objective value of every individual (rows of ``angles``, 12 columns)."""
    vecs = _kernels.angles_to_vectors(angles)
    return _kernels.bell_batch(vecs, T, _weights(objective))


def _analytic_seeds(T, objective) -> np.ndarray:
    W = _weights(objective)
    seeds = []
    if np.array_equal(W, SVETLICHNY_WEIGHTS):
        for fr in analytic_frames():
            seeds.append(MeasurementFrame.from_vectors(_frame_from_reduced(T, *fr)).angles)
    elif np.array_equal(W, MERMIN_WEIGHTS):
        for fr in mermin_frames():
            seeds.append(MeasurementFrame.from_vectors(fr).angles)
    return np.array(seeds).reshape(-1, 12)


def _run_once(T, W, params: GAParams, rng: np.random.Generator, seeds: np.ndarray):
    P = params.population
    n_elite = max(1, int(round(params.elite_fraction * P)))
    pop = np.empty((P, 12))
    pop[:, 0::2] = np.arccos(rng.uniform(-1.0, 1.0, size=(P, 6)))
    pop[:, 1::2] = rng.uniform(-math.pi, math.pi, size=(P, 6))
    if len(seeds):
        pop[: len(seeds)] = seeds
    fit = _kernels.bell_batch(_kernels.angles_to_vectors(pop), T, W)
    sigma = params.sigma0
    best = -np.inf
    stagnant = 0
    gen = 0
    converged = False
    while gen < params.max_generations:
        gen += 1
        order = np.argsort(-fit, kind="stable")
        elite = pop[order[:n_elite]]
        elite_fit = fit[order[:n_elite]]
        parents = elite[rng.integers(0, n_elite, size=P - n_elite)]
        children = parents + rng.normal(0.0, sigma, size=parents.shape)
        child_fit = _kernels.bell_batch(_kernels.angles_to_vectors(children), T, W)
        pop = np.vstack([elite, children])
        fit = np.concatenate([elite_fit, child_fit])
        cur = fit.max()
        if cur > best + params.delta:
            best = cur
            stagnant = 0
        else:
            stagnant += 1
        if stagnant >= params.stagnation:
            sigma *= 0.5
            stagnant = 0
            if sigma < params.min_sigma:
                converged = True
                break
    k = int(np.argmax(fit))
    return pop[k].copy(), float(fit[k]), gen, converged


def _polish(T, W, x0):
    def f(x):
        return -float(_kernels.bell_batch(_kernels.angles_to_vectors(x[None, :]), T, W)[0])

    res = minimize(f, x0, method="L-BFGS-B", options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 500})
    return res.x, -res.fun


def ga_maximize(T: np.ndarray, objective="svetlichny", params: GAParams | None = None,
                seed: int = 0, threads: int = 1, strict: bool = False) -> BellResult:
    """Maximise a three-mode Bell functional over measurement frames.

    Each restart runs an elitist evolution (Gaussian mutations of the angles,
    mutation scale halved after ``stagnation`` generations without an
    improvement larger than ``delta``) until the scale drops below
    ``min_sigma``.  The best individual over all restarts is optionally
    refined with a quasi-Newton step.  Restart ``k`` draws from the k-th child
    of ``SeedSequence(seed)``, so the result does not depend on ``threads``.

    Raises:
        NotConverged: if ``strict`` and any restart hit ``max_generations``.
    """
    params = params or GAParams()
    T = np.ascontiguousarray(T, dtype=float)
    W = _weights(objective)
    seeds = _analytic_seeds(T, objective) if params.seed_analytic else np.zeros((0, 12))
    children = np.random.SeedSequence(seed).spawn(params.restarts)

    def job(k):
        rng = np.random.default_rng(children[k])
        return _run_once(T, W, params, rng, seeds if k == 0 else np.zeros((0, 12)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(job, range(params.restarts)))
    else:
        runs = [job(k) for k in range(params.restarts)]

    values = [r[1] for r in runs]
    k = int(np.argmax(values))
    x, val = runs[k][0], runs[k][1]
    if params.polish:
        xp, vp = _polish(T, W, x)
        if vp > val:
            x, val = xp, vp
    gens = int(sum(r[2] for r in runs))
    converged = all(r[3] for r in runs)
    name = objective if isinstance(objective, str) else "custom"
    result = BellResult(name.capitalize(), float(val), MeasurementFrame(np.asarray(x)), gens,
                        params.restarts, converged, seed,
                        {"restart_values": values, "ga_best": float(runs[k][1])})
    if strict and not converged:
        raise NotConverged("GA hit the generation limit before the mutation scale collapsed", result)
    return result
