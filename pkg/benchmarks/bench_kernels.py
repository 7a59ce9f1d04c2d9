"""Compare the numba and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--population 200] [--n-max 40] [--repeat 5]

Times (i) one GA generation's worth of Svetlichny evaluations over a
population of measurement frames and (ii) one three-mode Fock contraction,
checks that both code paths agree, and prints a small table.
"""
import argparse
import time

import numpy as np

from bhbell import _kernels
from bhbell.bdg_scattering import smatrix
from bhbell.bell import SVETLICHNY_WEIGHTS
from bhbell.dispersion import threshold_omega
from bhbell.flow_config import FlowKind, build_config
from bhbell.gaussian_state import moments_at
from bhbell.pseudospin import fock_oracle_state, pseudospin_matrix, three_mode_correlators


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--population", type=int, default=200)
    ap.add_argument("--n-max", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    flow = build_config(FlowKind.Waterfall, 0.587)
    omega = 0.1 * threshold_omega(flow)
    S = smatrix(flow, omega)
    mom = moments_at(flow, omega, 0.0, S=S)
    T = three_mode_correlators(mom)

    rng = np.random.default_rng(0)
    angles = np.empty((args.population, 12))
    angles[:, 0::2] = np.arccos(rng.uniform(-1, 1, (args.population, 6)))
    angles[:, 1::2] = rng.uniform(0, 2 * np.pi, (args.population, 6))
    vecs = _kernels.angles_to_vectors(angles)

    state = fock_oracle_state(S, mom, n_start=args.n_max, n_cap=args.n_max)
    A, B, C = (pseudospin_matrix(ax, state.n_max) for ax in "yyz")

    rows = []
    if _kernels.NUMBA_ENABLED:
        # first calls compile; keep them out of the timings
        _kernels.bell_batch(vecs, T, SVETLICHNY_WEIGHTS)
        _kernels.fock_contract(state.amp, A, B, C)
        nb_bell = best_time(lambda: _kernels.bell_batch(vecs, T, SVETLICHNY_WEIGHTS), args.repeat)
        nb_fock = best_time(lambda: _kernels.fock_contract(state.amp, A, B, C), args.repeat)
    else:
        nb_bell = nb_fock = float("nan")
    np_bell = best_time(lambda: _kernels.bell_batch_numpy(vecs, T, SVETLICHNY_WEIGHTS), args.repeat)
    np_fock = best_time(lambda: _kernels.fock_contract_numpy(state.amp, A, B, C), args.repeat)

    diff_bell = np.max(np.abs(_kernels.bell_batch(vecs, T, SVETLICHNY_WEIGHTS)
                              - _kernels.bell_batch_numpy(vecs, T, SVETLICHNY_WEIGHTS)))
    diff_fock = abs(_kernels.fock_contract(state.amp, A, B, C) - _kernels.fock_contract_numpy(state.amp, A, B, C))
    rows.append(("GA population (P=%d)" % args.population, np_bell, nb_bell, diff_bell))
    rows.append(("Fock contraction (n_max=%d)" % state.n_max, np_fock, nb_fock, diff_fock))

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speed-up':>9s} {'max diff':>10s}")
    for name, t_np, t_nb, d in rows:
        print(f"{name:32s} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} {t_np / t_nb:9.1f} {d:10.2e}")


if __name__ == "__main__":
    main()
