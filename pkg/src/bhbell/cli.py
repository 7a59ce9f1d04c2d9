"""Command-line interface.

    bhbell <command> [options]

Commands: spectrum, smatrix, entanglement, correlators, oracle, bell, figure,
sweep.  Global options (accepted before or after the command): --config,
--seed, --out, --threads, --guard.  Frequencies given on the command line are
in units of the threshold Omega; temperatures in units of g n_u.
"""
from __future__ import annotations

import argparse
import io
import sys
from itertools import product
from pathlib import Path

import numpy as np

from .bdg_scattering import optical_model, smatrix
from .bell import GAParams, chsh_from_moments, ga_maximize
from .config import RunConfig, check_subthreshold, load_config, parse_float_list
from .dispersion import THRESHOLD_GUARD, Region, channel_roots, threshold_omega
from .errors import BHBellError
from .figures import FIGURES, reproduce_figure
from .flow_config import FlowKind
from .gaussian_state import covariance, moments_at, ppt_measure, thermal_occupations
from .pseudospin import (AXES, correlator_tensor, fock_oracle_tensor, ghz_eigenrelation_check,
                         three_mode_correlators)
from .sweep import SweepSpec, fmt, header_lines, run_sweep


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", default=d, help="key = value configuration file")
    g.add_argument("--seed", type=int, default=d if suppress else 0)
    g.add_argument("--out", default=d, help="output file (directory for 'figure'); stdout if omitted")
    g.add_argument("--threads", type=int, default=d if suppress else 1)
    g.add_argument("--guard", type=float, default=d if suppress else THRESHOLD_GUARD,
                   help="relative threshold guard band")
    g.add_argument("--kind", default=d, help="flow kind (instead of --config)")
    g.add_argument("--m-u", dest="m_u", default=d, help="upstream Mach number(s)")
    g.add_argument("--m-d", dest="m_d", default=d, help="downstream Mach number (flat profile)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bhbell", description=__doc__.split("\n\n")[0],
                                     parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    p = sub.add_parser("spectrum", parents=[common], help="labelled dispersion roots")
    p.add_argument("--region", choices=["u", "d", "both"], default="both")
    p.add_argument("--omega-grid", default=None)

    p = sub.add_parser("smatrix", parents=[common], help="scattering matrix entries")
    p.add_argument("--omega", type=float, default=None, help="single frequency (units of Omega)")
    p.add_argument("--omega-grid", default=None)
    p.add_argument("--precision", choices=["auto", "double", "extended"], default="auto")

    p = sub.add_parser("entanglement", parents=[common], help="PPT measures and CHSH parameters")
    p.add_argument("--pairs", default="02,12,01")
    p.add_argument("--T", default=None, help="temperature list")
    p.add_argument("--omega-grid", default=None)

    p = sub.add_parser("correlators", parents=[common], help="pseudo-spin correlation tables")
    p.add_argument("--omega", type=float, required=True, help="frequency (units of Omega)")
    p.add_argument("--T", type=float, default=0.0)

    p = sub.add_parser("oracle", parents=[common], help="Fock-space cross-check of the correlators")
    p.add_argument("--omega", type=float, default=0.5, help="frequency (units of Omega)")
    p.add_argument("--n-max", type=int, default=40, help="initial truncation")

    p = sub.add_parser("bell", parents=[common], help="optimised Bell parameters")
    p.add_argument("functional", choices=["chsh", "svetlichny", "mermin"])
    p.add_argument("--T", default=None)
    p.add_argument("--omega-grid", default=None)
    p.add_argument("--pairs", default="02,12")
    p.add_argument("--restarts", type=int, default=None)

    p = sub.add_parser("figure", parents=[common], help="reproduce the data of a figure")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--points", type=int, default=None, help="override the number of omega points")
    p.add_argument("--restarts", type=int, default=None, help="override GA restarts")

    p = sub.add_parser("sweep", parents=[common], help="run a configured parameter sweep")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--restarts", type=int, default=None)
    return parser


# --------------------------------------------------------------------------


def _run_config(args) -> RunConfig:
    if getattr(args, "config", None):
        rc = load_config(args.config)
    elif getattr(args, "kind", None) and getattr(args, "m_u", None):
        rc = RunConfig(FlowKind.parse(args.kind), parse_float_list(args.m_u))
    else:
        raise SystemExit("error: give --config or both --kind and --m-u")
    if getattr(args, "m_d", None) is not None:
        rc.m_d = args.m_d if args.m_d == "auto" else float(args.m_d)
    # command-line values override the file, so that metadata echoes what was run
    if getattr(args, "T", None) is not None and not isinstance(args.T, float):
        rc.temperatures = parse_float_list(args.T)
    if getattr(args, "omega_grid", None):
        rc.omega_grid = args.omega_grid
    if getattr(args, "omega", None) is not None:
        rc.omega_grid = f"{args.omega:g}"
    if getattr(args, "seed", None):
        rc.seed = args.seed
    return rc


def _emit(args, columns, rows, metadata):
    buf = io.StringIO()
    for line in header_lines(metadata):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r.get(c, float("nan"))) for c in columns) + "\n")
    if getattr(args, "out", None):
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_spectrum(args):
    rc = _run_config(args)
    regions = [Region.Upstream, Region.Downstream] if args.region == "both" else [Region.parse(args.region)]
    rows = []
    for flow in rc.flows():
        Om = threshold_omega(flow)
        for w in rc.grid():
            for reg in regions:
                for r in channel_roots(flow, reg, w * Om, args.guard):
                    rows.append({"m_u": flow.m_u, "omega_over_Omega": w, "omega": w * Om, "region": reg.value,
                                 "label": r.label.value, "q_re": r.q.real, "q_im": r.q.imag,
                                 "norm_sign": r.norm_sign, "v_group": r.v_group if r.is_real else float("nan")})
    cols = ["m_u", "omega_over_Omega", "omega", "region", "label", "q_re", "q_im", "norm_sign", "v_group"]
    _emit(args, cols, rows, rc.echo())


def cmd_smatrix(args):
    rc = _run_config(args)
    grid = rc.grid()
    rows = []
    for flow in rc.flows():
        Om = threshold_omega(flow)
        for w in grid:
            S = smatrix(flow, w * Om, args.guard, args.precision)
            row = {"m_u": flow.m_u, "omega_over_Omega": w, "omega": w * Om, "dim": S.dim, "residual": S.residual()}
            for i, j in product(range(S.dim), repeat=2):
                row[f"S{i}{j}_re"] = S[i, j].real
                row[f"S{i}{j}_im"] = S[i, j].imag
            if S.dim == 3:
                opt = optical_model(S)
                row["r2"], row["gamma0"] = opt.r2, opt.gamma0
            rows.append(row)
    cols = ["m_u", "omega_over_Omega", "omega", "dim"]
    cols += [f"S{i}{j}_{p}" for i, j in product(range(3), repeat=2) for p in ("re", "im")]
    cols += ["r2", "gamma0", "residual"]
    _emit(args, cols, rows, rc.echo())


def cmd_entanglement(args):
    rc = _run_config(args)
    pairs = [p.strip() for p in args.pairs.split(",") if p.strip()]
    grid = check_subthreshold(rc.grid(), args.guard)
    rows = []
    for flow in rc.flows():
        Om = threshold_omega(flow)
        for T in rc.temperatures:
            for w in grid:
                row = {"m_u": flow.m_u, "T": T, "omega_over_Omega": w, "omega": w * Om}
                try:
                    mom = moments_at(flow, w * Om, T)
                    row["delta"] = covariance(mom).delta
                    for p in pairs:
                        row[f"Lambda{p}"] = ppt_measure(mom, p)
                        row[f"B{p}"] = chsh_from_moments(mom, p).value
                    row["status"] = "ok"
                except BHBellError as exc:
                    row["status"] = type(exc).__name__
                rows.append(row)
    cols = ["m_u", "T", "omega_over_Omega", "omega", "delta"]
    cols += [f"{q}{p}" for p in pairs for q in ("Lambda", "B")] + ["status"]
    _emit(args, cols, rows, rc.echo())


def cmd_correlators(args):
    rc = _run_config(args)
    rows = []
    for flow in rc.flows():
        mom = moments_at(flow, args.omega * threshold_omega(flow), args.T)
        ct = correlator_tensor(mom)
        for pair, T2 in ct.two_mode.items():
            for i, j in product(range(3), repeat=2):
                rows.append({"m_u": flow.m_u, "table": f"T({pair[0]}|{pair[1]})", "axes": AXES[i] + AXES[j],
                             "value": T2[i, j]})
        for i, j, k in product(range(3), repeat=3):
            rows.append({"m_u": flow.m_u, "table": "T(0|1|2)", "axes": AXES[i] + AXES[j] + AXES[k],
                         "value": ct.three_mode[i, j, k]})
    meta = rc.echo() + [f"T = {args.T:g}"]
    _emit(args, ["m_u", "table", "axes", "value"], rows, meta)


def cmd_oracle(args):
    rc = _run_config(args)
    for flow in rc.flows():
        S = smatrix(flow, args.omega * threshold_omega(flow), args.guard)
        mom = moments_at(flow, S.omega, 0.0, S=S)
        Ta = three_mode_correlators(mom)
        Tf, st = fock_oracle_tensor(S, mom, n_start=args.n_max)
        ghz = ghz_eigenrelation_check(st)
        print(f"{flow.label()} omega/Omega={args.omega:g} n_max={st.n_max} captured_norm={st.captured_norm:.8f}")
        print(f"  max |fock - closed form| = {np.max(np.abs(Tf - Ta)):.3e}")
        zero = np.abs(Ta) == 0
        print(f"  max |fock| on analytic zeros = {np.max(np.abs(Tf[zero])):.3e}")
        print("  GHZ residuals (yyz, yzy, zyy, zzz) = " + ", ".join(f"{r:.4f}" for r in ghz.residuals))


def cmd_bell(args):
    rc = _run_config(args)
    grid = check_subthreshold(rc.grid(), args.guard)
    ga = GAParams() if args.restarts is None else GAParams(restarts=args.restarts)
    rows = []
    pairs = [p.strip() for p in args.pairs.split(",") if p.strip()]
    for flow in rc.flows():
        Om = threshold_omega(flow)
        for T in rc.temperatures:
            for w in grid:
                row = {"m_u": flow.m_u, "T": T, "omega_over_Omega": w, "omega": w * Om, "status": "ok"}
                try:
                    mom = moments_at(flow, w * Om, T)
                    if args.functional == "chsh":
                        for p in pairs:
                            r = chsh_from_moments(mom, p)
                            row[f"B{p}"] = r.value
                            row[f"B{p}_c_basis"] = r.diagnostics["c_basis"]
                    else:
                        r = ga_maximize(three_mode_correlators(mom), args.functional, ga,
                                        seed=args.seed, threads=args.threads)
                        row["value"] = r.value
                        row["generations"], row["restarts"] = r.generations, r.restarts
                        row["converged"] = int(r.converged)
                        for k, ang in enumerate(r.frame.angles):
                            row[f"angle{k}"] = ang
                except BHBellError as exc:
                    row["status"] = type(exc).__name__
                rows.append(row)
    cols = ["m_u", "T", "omega_over_Omega", "omega"]
    if args.functional == "chsh":
        cols += [f"B{p}{s}" for p in pairs for s in ("", "_c_basis")]
    else:
        cols += ["value"] + [f"angle{k}" for k in range(12)] + ["generations", "restarts", "converged"]
    cols.append("status")
    _emit(args, cols, rows, rc.echo() + [f"functional = {args.functional}", f"seed = {args.seed}"])


def cmd_figure(args):
    m_u = parse_float_list(args.m_u) if getattr(args, "m_u", None) else None
    path = reproduce_figure(args.figure, getattr(args, "out", None) or "figures", seed=args.seed,
                            points=args.points, restarts=args.restarts, m_u=m_u, threads=args.threads)
    print(path)


def cmd_sweep(args):
    rc = _run_config(args)
    if not rc.quantities:
        raise SystemExit("error: the configuration must list 'quantities'")
    ga = GAParams() if args.restarts is None else GAParams(restarts=args.restarts)
    out = getattr(args, "out", None) or "sweep.csv"
    spec = SweepSpec(rc.flows(), rc.grid(), rc.temperatures, rc.quantities, Path(out), rc.seed, ga,
                     args.guard, args.threads, rc.echo(), args.resume)
    print(run_sweep(spec))


COMMANDS = {"spectrum": cmd_spectrum, "smatrix": cmd_smatrix, "entanglement": cmd_entanglement,
            "correlators": cmd_correlators, "oracle": cmd_oracle, "bell": cmd_bell,
            "figure": cmd_figure, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (BHBellError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
