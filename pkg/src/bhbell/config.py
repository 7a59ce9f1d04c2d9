"""Run configuration files and frequency-grid specifications.

A configuration file is plain ``key = value`` text (``#`` starts a comment)::

    kind = Waterfall
    m_u = 0.587            # or a list: 0.2, 0.5, 0.8
    m_d = 4.0              # FlatProfile only; "auto" means m_u**-2
    temperatures = 0, 0.1, 0.2
    omega_grid = log:1e-4:0.999:200
    quantities = Lambda02, Lambda12, B02, B12

Frequencies in a grid are in units of the threshold Omega.  Grid syntax:
``log:lo:hi:n``, ``lin:lo:hi:n`` or an explicit comma-separated list.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dispersion import THRESHOLD_GUARD
from .flow_config import FlowConfig, FlowKind, build_config

DEFAULT_GRID = "log:1e-3:0.999:100"


def parse_float_list(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    return [float(p) for p in parts]


def parse_omega_grid(spec: str) -> np.ndarray:
    """Frequencies (units of Omega) described by ``spec``; raises on an empty grid."""
    spec = str(spec).strip()
    if not spec:
        raise ValueError("empty omega grid")
    head, _, rest = spec.partition(":")
    if head in ("log", "lin"):
        try:
            lo, hi, n = rest.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError as exc:
            raise ValueError(f"bad grid spec {spec!r}; expected {head}:lo:hi:n") from exc
        if n <= 0:
            raise ValueError("empty omega grid")
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad grid bounds in {spec!r}")
        grid = np.geomspace(lo, hi, n) if head == "log" else np.linspace(lo, hi, n)
    else:
        grid = np.array(parse_float_list(spec))
    if grid.size == 0:
        raise ValueError("empty omega grid")
    if np.any(grid <= 0):
        raise ValueError("frequencies must be positive")
    return grid


def check_subthreshold(grid: np.ndarray, guard: float = THRESHOLD_GUARD) -> np.ndarray:
    """Reject grids that leave (0, Omega) or touch the threshold guard band."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty omega grid")
    if np.any(grid >= 1.0 - guard):
        raise ValueError("grid must lie strictly below the threshold (outside the guard band)")
    return grid


@dataclass
class RunConfig:
    kind: FlowKind
    m_u: list[float]
    m_d: float | str | None = None
    temperatures: list[float] = field(default_factory=lambda: [0.0])
    omega_grid: str = DEFAULT_GRID
    quantities: list[str] = field(default_factory=list)
    seed: int = 0
    guard: float = THRESHOLD_GUARD
    source: str = ""

    def flows(self) -> list[FlowConfig]:
        return [self.flow(m) for m in self.m_u]

    def flow(self, m_u: float) -> FlowConfig:
        if self.kind is FlowKind.FlatProfile:
            m_d = m_u**-2 if self.m_d in (None, "auto") else float(self.m_d)
            return build_config(self.kind, m_u, m_d)
        return build_config(self.kind, m_u, None if self.m_d in (None, "auto") else float(self.m_d))

    def grid(self) -> np.ndarray:
        return parse_omega_grid(self.omega_grid)

    def echo(self) -> list[str]:
        """Normalised ``key = value`` lines (for CSV metadata headers)."""
        lines = [f"kind = {self.kind.value}", "m_u = " + ", ".join(f"{m:g}" for m in self.m_u)]
        if self.m_d is not None:
            lines.append(f"m_d = {self.m_d}")
        lines.append("temperatures = " + ", ".join(f"{t:g}" for t in self.temperatures))
        lines.append(f"omega_grid = {self.omega_grid}")
        if self.quantities:
            lines.append("quantities = " + ", ".join(self.quantities))
        lines.append(f"seed = {self.seed}")
        lines.append(f"guard = {self.guard:g}")
        return lines


_KEYS = {"kind", "m_u", "m_d", "temperatures", "temperature", "t", "omega_grid", "quantities", "seed", "guard"}


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   delimiters=("=",), interpolation=None)
    cp.read_string("[run]\n" + text, source=source)
    sec = dict(cp["run"])
    unknown = set(sec) - _KEYS
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    if "kind" not in sec or "m_u" not in sec:
        raise ValueError("configuration needs at least 'kind' and 'm_u'")
    m_d = sec.get("m_d")
    if m_d is not None and m_d.strip().lower() != "auto":
        m_d = float(m_d)
    elif m_d is not None:
        m_d = "auto"
    temps = sec.get("temperatures", sec.get("temperature", sec.get("t", "0")))
    quantities = [q.strip() for q in sec.get("quantities", "").split(",") if q.strip()]
    return RunConfig(
        kind=FlowKind.parse(sec["kind"]),
        m_u=parse_float_list(sec["m_u"]),
        m_d=m_d,
        temperatures=parse_float_list(temps),
        omega_grid=sec.get("omega_grid", DEFAULT_GRID),
        quantities=quantities,
        seed=int(sec.get("seed", 0)),
        guard=float(sec.get("guard", THRESHOLD_GUARD)),
        source=source,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))
