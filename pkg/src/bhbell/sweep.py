"""Parameter sweeps: per-point observables, deterministic CSV output, manifests."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bdg_scattering import optical_model, smatrix
from .bell import GAParams, chsh_from_moments, ga_maximize
from .config import check_subthreshold
from .dispersion import THRESHOLD_GUARD, threshold_omega
from .errors import BHBellError
from .flow_config import FlowConfig
from .gaussian_state import covariance, fmode_state, ppt_measure, second_moments, thermal_occupations
from .pseudospin import ghz_eigenrelation_check, three_mode_correlators

QUANTITIES = (
    "r2", "gamma0", "residual", "delta",
    "Lambda02", "Lambda12", "Lambda01", "B02", "B12", "B01",
    "Lambda_f", "B_f", "S3", "M3", "GHZ",
)
_EXPANDS = {"GHZ": ["GHZ_yyz", "GHZ_yzy", "GHZ_zyy", "GHZ_zzz"]}


def fmt(v) -> str:
    """Deterministic text form of a CSV value."""
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return format(float(v), ".15g")
    return str(v)


def columns_for(quantities) -> list[str]:
    out = []
    for q in quantities:
        if q not in QUANTITIES:
            raise ValueError(f"unknown quantity {q!r}; choose from {', '.join(QUANTITIES)}")
        out += _EXPANDS.get(q, [q])
    return out


def evaluate_point(config: FlowConfig, omega_rel: float, T: float, quantities, seed: int = 0,
                   ga: GAParams | None = None, guard: float = THRESHOLD_GUARD) -> dict:
    """All requested observables at one (config, omega/Omega, T)."""
    Om = threshold_omega(config)
    omega = omega_rel * Om
    S = smatrix(config, omega, guard)
    nbar = thermal_occupations(config, omega, T)
    mom = second_moments(S, nbar, T)
    out = {}
    T3 = None
    for q in quantities:
        if q == "r2":
            out[q] = optical_model(S).r2
        elif q == "gamma0":
            out[q] = optical_model(S).gamma0
        elif q == "residual":
            out[q] = S.residual()
        elif q == "delta":
            out[q] = covariance(mom).delta
        elif q.startswith("Lambda") and q != "Lambda_f":
            out[q] = ppt_measure(mom, q[-2:])
        elif q in ("B02", "B12", "B01"):
            out[q] = chsh_from_moments(mom, q[-2:]).value
        elif q in ("Lambda_f", "B_f"):
            f = fmode_state(S, nbar)
            out[q] = f.lambda_f if q == "Lambda_f" else f.B_f
        elif q in ("S3", "M3"):
            T3 = three_mode_correlators(mom) if T3 is None else T3
            obj = "svetlichny" if q == "S3" else "mermin"
            out[q] = ga_maximize(T3, obj, ga, seed=seed).value
        elif q == "GHZ":
            rep = ghz_eigenrelation_check(mom)
            for name, r in zip(_EXPANDS["GHZ"], rep.residuals):
                out[name] = r
        else:
            raise ValueError(f"unknown quantity {q!r}")
    return out


@dataclass
class SweepSpec:
    flows: list[FlowConfig]
    omega_grid: np.ndarray
    temperatures: list[float]
    quantities: list[str]
    out: Path
    seed: int = 0
    ga: GAParams | None = None
    guard: float = THRESHOLD_GUARD
    threads: int = 1
    metadata: list[str] = field(default_factory=list)
    resume: bool = False


def _task(args):
    idx, flow, w, T, quantities, seed, ga, guard = args
    try:
        vals = evaluate_point(flow, w, T, quantities, seed, ga, guard)
        return idx, vals, "ok"
    except (BHBellError, ValueError, ArithmeticError) as exc:
        return idx, {}, f"{type(exc).__name__}: {exc}".replace(",", ";")


def sweep_tasks(spec: SweepSpec):
    grid = check_subthreshold(spec.omega_grid, spec.guard)
    if not spec.quantities:
        raise ValueError("no quantities requested")
    columns_for(spec.quantities)
    tasks = []
    idx = 0
    for flow in spec.flows:
        for T in spec.temperatures:
            for w in grid:
                tasks.append((idx, flow, float(w), float(T), tuple(spec.quantities), spec.seed, spec.ga, spec.guard))
                idx += 1
    return tasks


def header_lines(metadata) -> list[str]:
    return [f"# bhbell {__version__}"] + [f"# {line}" for line in metadata]


def run_sweep(spec: SweepSpec) -> Path:
    """Evaluate every (m_u, T, omega) point and write one CSV row per point.

    Rows are flushed as they complete (in sweep-index order, whatever the
    pool's completion order), errors of a point are recorded in the
    ``status`` column, and with ``resume`` rows already present are skipped.
    A JSON manifest is written next to the CSV.
    """
    tasks = sweep_tasks(spec)  # validates before any computation
    cols = ["index", "kind", "m_u", "m_d", "T", "omega_over_Omega", "omega"] + columns_for(spec.quantities) + ["status"]
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    done = set()
    if spec.resume and out.exists():
        with out.open() as fh:
            rows = [ln for ln in fh if not ln.startswith("#")]
        for row in csv.DictReader(rows):
            done.add(int(row["index"]))
        fh = out.open("a", newline="")
    else:
        fh = out.open("w", newline="")
        for line in header_lines(spec.metadata):
            fh.write(line + "\n")
        fh.write(",".join(cols) + "\n")
    todo = [t for t in tasks if t[0] not in done]
    try:
        if spec.threads > 1:
            with ProcessPoolExecutor(max_workers=spec.threads) as ex:
                results = ex.map(_task, todo, chunksize=1)
                _write_rows(fh, cols, todo, results)
        else:
            _write_rows(fh, cols, todo, map(_task, todo))
    finally:
        fh.close()
    write_manifest(out.with_suffix(".manifest.json"), spec)
    return out


def _write_rows(fh, cols, tasks, results):
    for task, (idx, vals, status) in zip(tasks, results):
        _, flow, w, T, *_ = task
        Om = threshold_omega(flow)
        row = {"index": idx, "kind": flow.kind.value, "m_u": flow.m_u, "m_d": flow.m_d, "T": T,
               "omega_over_Omega": w, "omega": w * Om, "status": status}
        row.update(vals)
        fh.write(",".join(fmt(row.get(c, float("nan"))) for c in cols) + "\n")
        fh.flush()


def versions() -> dict:
    import mpmath
    import numba
    import scipy

    return {"bhbell": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "mpmath": mpmath.__version__}


def write_manifest(path: Path, spec: SweepSpec) -> None:
    data = {
        "metadata": spec.metadata,
        "seed": spec.seed,
        "flows": [{"kind": f.kind.value, "m_u": f.m_u, "m_d": f.m_d} for f in spec.flows],
        "temperatures": list(spec.temperatures),
        "omega_grid": [float(w) for w in spec.omega_grid],
        "quantities": list(spec.quantities),
        "ga": None if spec.ga is None else spec.ga.__dict__,
        "versions": versions(),
        "argv": sys.argv[1:],
    }
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_table(path, columns, rows, metadata=()) -> Path:
    """Write a list of dict rows as CSV with the standard ``#`` metadata block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for line in header_lines(metadata):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r.get(c, float("nan"))) for c in columns) + "\n")
    path.write_text(buf.getvalue())
    return path
