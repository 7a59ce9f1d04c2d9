"""Figure-data reproduction: one CSV (plus a plotting script) per figure.

Each figure has embedded defaults; ``points``, ``restarts`` and ``m_u``
override them (the GA figures are expensive at full resolution).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bell import GAParams
from .config import parse_omega_grid
from .dispersion import threshold_omega
from .flow_config import FlowKind, background_profile, build_config
from .sweep import _task, columns_for, write_table

M_D_REF = 2.9
FIGURES = ("Fig3", "Fig4", "Fig5", "Fig6", "Fig7", "Fig8", "FigC1",
           "FigI1", "FigI2", "FigI3", "FigI4", "FigI5", "FigI6")

#: figure id -> (description, kind, default m_u list, temperatures, grid, quantities)
_CURVES = {
    "Fig3": ("CHSH parameters and PPT measures vs omega, waterfall m_d = 2.9",
             FlowKind.Waterfall, [1 / math.sqrt(M_D_REF)], [0.0, 0.1, 0.2],
             "log:1e-3:0.999:120", ["B02", "B12", "Lambda02", "Lambda12"]),
    "Fig5": ("Svetlichny parameter vs omega at T = 0, waterfall",
             FlowKind.Waterfall, [0.3, 0.5, 1 / math.sqrt(M_D_REF), 0.8], [0.0],
             "log:1e-4:0.95:40", ["S3"]),
    "Fig6": ("Svetlichny parameter vs omega at T = 0.05, waterfall",
             FlowKind.Waterfall, [0.3, 0.5, 1 / math.sqrt(M_D_REF), 0.8], [0.05],
             "log:1e-4:0.95:40", ["S3"]),
    "Fig7": ("Mermin parameter vs omega at T = 0 and 0.1, waterfall",
             FlowKind.Waterfall, [0.3, 0.5, 1 / math.sqrt(M_D_REF), 0.8], [0.0, 0.1],
             "log:1e-4:0.95:40", ["M3"]),
    "FigC1": ("Optical-model (f1|f2) witnesses vs omega, waterfall m_d = 2.9",
              FlowKind.Waterfall, [1 / math.sqrt(M_D_REF)], [0.0, 0.1, 0.2],
              "log:1e-3:0.999:120", ["B_f", "Lambda_f"]),
    "FigI3": ("Svetlichny parameter vs omega at T = 0, delta peak",
              FlowKind.DeltaPeak, [0.3, 0.5, 0.7], [0.0], "log:1e-4:0.95:40", ["S3"]),
    "FigI4": ("Svetlichny parameter vs omega at T = 0, flat profile (m_d = m_u^-2)",
              FlowKind.FlatProfile, [0.3, 0.5, 0.7], [0.0], "log:1e-4:0.95:40", ["S3"]),
    "FigI5": ("Mermin parameter vs omega at T = 0 and 0.1, delta peak",
              FlowKind.DeltaPeak, [0.3, 0.5, 0.7], [0.0, 0.1], "log:1e-4:0.95:40", ["M3"]),
    "FigI6": ("Mermin parameter vs omega at T = 0 and 0.1, flat profile (m_d = m_u^-2)",
              FlowKind.FlatProfile, [0.3, 0.5, 0.7], [0.0, 0.1], "log:1e-4:0.95:40", ["M3"]),
}
#: maxima over omega as functions of m_u
_MAXIMA = {
    "Fig4": ("Maxima over omega of B and Lambda vs m_u, waterfall", FlowKind.Waterfall, [0.0, 0.2]),
    "FigI1": ("Maxima over omega of B and Lambda vs m_u, delta peak", FlowKind.DeltaPeak, [0.0]),
    "FigI2": ("Maxima over omega of B and Lambda vs m_u, flat profile (m_d = m_u^-2)", FlowKind.FlatProfile, [0.0]),
}
FIGURE_GA = GAParams(restarts=5)


def _flow(kind, m_u):
    if kind is FlowKind.FlatProfile:
        return build_config(kind, m_u, m_u**-2)
    return build_config(kind, m_u)


def _grid(spec: str, points: int | None) -> np.ndarray:
    if points is None:
        return parse_omega_grid(spec)
    head, lo, hi, _ = spec.split(":")
    return parse_omega_grid(f"{head}:{lo}:{hi}:{points}")


def _evaluate(tasks, threads: int):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_task, tasks, chunksize=1))
    return [_task(t) for t in tasks]


def curve_rows(kind, m_us, temps, grid, quantities, seed=0, ga=None, threads=1):
    flows = [_flow(kind, m) for m in m_us]
    tasks = []
    for flow in flows:
        for T in temps:
            for w in grid:
                tasks.append((len(tasks), flow, float(w), float(T), tuple(quantities), seed, ga, 1e-9))
    rows = []
    for task, (_, vals, status) in zip(tasks, _evaluate(tasks, threads)):
        _, flow, w, T, *_ = task
        row = {"kind": flow.kind.value, "m_u": flow.m_u, "m_d": flow.m_d, "T": T,
               "omega_over_Omega": w, "omega": w * threshold_omega(flow), "status": status}
        row.update(vals)
        rows.append(row)
    return rows


def _plot_script(csv_name: str, x: str, ys: list[str], group: list[str], logx: bool) -> str:
    return f'''"""Plot {csv_name} (generated; reads only the CSV)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
curves = defaultdict(list)
for r in rows:
    curves[tuple(r[g] for g in {group!r})].append(r)
fig, ax = plt.subplots()
for key, rs in sorted(curves.items()):
    for y in {ys!r}:
        ax.plot([float(r["{x}"]) for r in rs], [float(r[y]) for r in rs],
                label=y + " " + " ".join(f"{{g}}={{k}}" for g, k in zip({group!r}, key)))
{"ax.set_xscale('log')" if logx else ""}
ax.set_xlabel("{x}")
ax.legend(fontsize="small")
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def reproduce_figure(fig_id: str, out_dir, seed: int = 0, points: int | None = None,
                     restarts: int | None = None, m_u=None, threads: int = 1) -> Path:
    """Write ``<fig_id>.csv`` and ``<fig_id>.plot.py`` into ``out_dir``; return the CSV path."""
    if fig_id not in FIGURES:
        raise ValueError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ga = FIGURE_GA if restarts is None else replace(FIGURE_GA, restarts=int(restarts))
    csv_path = out_dir / f"{fig_id}.csv"
    meta = [f"figure = {fig_id}", f"seed = {seed}"]

    if fig_id in _CURVES:
        desc, kind, m_def, temps, spec, qs = _CURVES[fig_id]
        m_us = m_def if m_u is None else list(m_u)
        grid = _grid(spec, points)
        uses_ga = any(q in ("S3", "M3") for q in qs)
        meta += [desc, f"kind = {kind.value}", "m_u = " + ", ".join(f"{m:.6g}" for m in m_us),
                 "temperatures = " + ", ".join(f"{t:g}" for t in temps), f"omega points = {len(grid)}"]
        if uses_ga:
            meta.append(f"ga restarts = {ga.restarts}, population = {ga.population}")
        rows = curve_rows(kind, m_us, temps, grid, qs, seed, ga if uses_ga else None, threads)
        cols = ["kind", "m_u", "m_d", "T", "omega_over_Omega", "omega"] + columns_for(qs) + ["status"]
        write_table(csv_path, cols, rows, meta)
        script = _plot_script(csv_path.name, "omega_over_Omega", columns_for(qs), ["m_u", "T"], True)

    elif fig_id in _MAXIMA:
        desc, kind, temps = _MAXIMA[fig_id]
        m_us = list(np.round(np.linspace(0.05, 0.95, 19), 6)) if m_u is None else list(m_u)
        grid = parse_omega_grid(f"log:1e-4:0.999:{points or 80}")
        qs = ["B02", "B12", "Lambda02", "Lambda12"]
        meta += [desc, f"kind = {kind.value}", f"omega points = {len(grid)}",
                 "temperatures = " + ", ".join(f"{t:g}" for t in temps)]
        rows = []
        for m in m_us:
            for T in temps:
                curve = curve_rows(kind, [m], [T], grid, qs, seed, None, threads)
                ok = [r for r in curve if r["status"] == "ok"]
                row = {"kind": kind.value, "m_u": m, "m_d": curve[0]["m_d"], "T": T,
                       "status": "ok" if len(ok) == len(curve) else f"{len(curve) - len(ok)} points failed"}
                for q in qs:
                    vals = np.array([r[q] for r in ok])
                    k = int(np.argmax(vals))
                    row[f"max_{q}"] = float(vals[k])
                    row[f"argmax_{q}"] = float(ok[k]["omega_over_Omega"])
                rows.append(row)
        cols = ["kind", "m_u", "m_d", "T"] + [f"{p}_{q}" for q in qs for p in ("max", "argmax")] + ["status"]
        write_table(csv_path, cols, rows, meta)
        script = _plot_script(csv_path.name, "m_u", [f"max_{q}" for q in qs], ["T"], False)

    else:  # Fig8: background profiles
        m = 0.5 if m_u is None else float(list(m_u)[0])
        x = np.linspace(-10.0, 10.0, points or 401)
        rows = [{"x": float(v)} for v in x]
        for kind in FlowKind:
            flow = _flow(kind, m)
            n, V = background_profile(flow, x)
            for r, nv, vv in zip(rows, n, V):
                r[f"n_{kind.value}"] = float(nv)
                r[f"V_{kind.value}"] = float(vv)
        cols = ["x"] + [f"{p}_{k.value}" for k in FlowKind for p in ("n", "V")]
        meta += ["background density and velocity profiles", f"m_u = {m:g} (flat profile m_d = m_u^-2)"]
        write_table(csv_path, cols, rows, meta)
        script = _plot_script(csv_path.name, "x", cols[1::2], [], False)

    (out_dir / f"{fig_id}.plot.py").write_text(script)
    return csv_path
