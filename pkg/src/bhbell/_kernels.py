"""Hot loops: batched Bell-functional evaluation and Fock-space contraction.

Both kernels exist as numba ``@njit`` functions and as pure-numpy fallbacks.
Set the environment variable ``BHBELL_DISABLE_NUMBA=1`` (before import) to
force the numpy versions; ``NUMBA_ENABLED`` reports which path is active.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and os.environ.get("BHBELL_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")


def angles_to_vectors(angles: np.ndarray) -> np.ndarray:
    """(..., 2k) polar/azimuthal angles -> (..., k, 3) unit vectors."""
    angles = np.asarray(angles, dtype=float)
    th = angles[..., 0::2]
    ph = angles[..., 1::2]
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)


# --------------------------------------------------------------------------
# Bell functionals: sum_{ijk} W[i,j,k] T(a_i, b_j, c_k) for a population


def _bell_batch_numpy(vecs, T, W):
    # vecs: (P, 6, 3) ordered a, a', b, b', c, c'
    A = vecs[:, 0:2]
    B = vecs[:, 2:4]
    C = vecs[:, 4:6]
    E = np.einsum("rst,pir,pjs,pkt->pijk", T, A, B, C, optimize=True)
    return np.einsum("pijk,ijk->p", E, W)


def _fock_contract_numpy(amp, A, B, C):
    n = amp.shape[0]
    camp = np.conj(amp)
    total = 0j
    for mu in range(n):
        row = camp[mu]
        if not np.any(row):
            continue
        for mu2 in range(n):
            a = A[mu, mu2]
            if a == 0:
                continue
            # sum_{nu, nu2} conj(amp[mu,nu]) amp[mu2,nu2] B[nu,nu2] C[mu+nu, mu2+nu2]
            Cs = np.zeros((n, n), dtype=complex)
            hi1 = n - mu
            hi2 = n - mu2
            Cs[:hi1, :hi2] = C[mu:mu + hi1, mu2:mu2 + hi2]
            total += a * (row @ ((B * Cs) @ amp[mu2]))
    return total


if NUMBA_ENABLED:

    @njit(cache=True, nogil=True)
    def _bell_batch_numba(vecs, T, W):
        P = vecs.shape[0]
        out = np.zeros(P)
        for p in range(P):
            acc = 0.0
            for i in range(2):
                for j in range(2):
                    for k in range(2):
                        w = W[i, j, k]
                        if w == 0.0:
                            continue
                        s = 0.0
                        for r in range(3):
                            ar = vecs[p, i, r]
                            for t in range(3):
                                bs_acc = 0.0
                                for q in range(3):
                                    bs_acc += T[r, q, t] * vecs[p, 2 + j, q]
                                s += ar * bs_acc * vecs[p, 4 + k, t]
                        acc += w * s
            out[p] = acc
        return out

    @njit(cache=True, nogil=True)
    def _fock_contract_numba(amp, A, B, C):
        n = amp.shape[0]
        total = 0j
        for mu in range(n):
            for nu in range(n - mu):
                x = np.conj(amp[mu, nu])
                if x == 0:
                    continue
                for mu2 in range(n):
                    a = A[mu, mu2]
                    if a == 0:
                        continue
                    for nu2 in range(n - mu2):
                        y = amp[mu2, nu2]
                        if y == 0:
                            continue
                        total += x * y * a * B[nu, nu2] * C[mu + nu, mu2 + nu2]
        return total


def bell_batch(vecs: np.ndarray, T: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Bell functional for every individual of a population.

    Args:
        vecs: (P, 6, 3) unit vectors a, a', b, b', c, c'.
        T: (3, 3, 3) correlation tensor.
        W: (2, 2, 2) weights of the terms T(a_i, b_j, c_k).
    """
    vecs = np.ascontiguousarray(vecs, dtype=float)
    T = np.ascontiguousarray(T, dtype=float)
    W = np.ascontiguousarray(W, dtype=float)
    if NUMBA_ENABLED:
        return _bell_batch_numba(vecs, T, W)
    return _bell_batch_numpy(vecs, T, W)


def fock_contract(amp: np.ndarray, A: np.ndarray, B: np.ndarray, C: np.ndarray) -> complex:
    """<psi| A x B x C |psi> for psi = sum amp[mu, nu] |mu, nu, mu + nu>.

    ``amp`` is (n+1, n+1) with zeros for mu + nu > n; A, B, C are (n+1, n+1).
    """
    amp = np.ascontiguousarray(amp, dtype=complex)
    A = np.ascontiguousarray(A, dtype=complex)
    B = np.ascontiguousarray(B, dtype=complex)
    C = np.ascontiguousarray(C, dtype=complex)
    if NUMBA_ENABLED:
        return complex(_fock_contract_numba(amp, A, B, C))
    return complex(_fock_contract_numpy(amp, A, B, C))


bell_batch_numpy = _bell_batch_numpy
fock_contract_numpy = _fock_contract_numpy
