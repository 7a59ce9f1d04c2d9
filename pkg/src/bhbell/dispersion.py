"""Bogoliubov dispersion, channel roots and the threshold frequency.

In a uniform region with flow velocity V and sound speed c (xi = 1/c) a mode
exp(i(q x - w t)) satisfies

    (w - V q)^2 = omega_B(q)^2 = c^2 q^2 + q^4 / 4,

a quartic in q.  Real roots are propagating channels; their Bogoliubov norm
has the sign of the comoving frequency w - V q and their group velocity is
dw/dq = V + (c^2 q + q^3/2) / (w - V q).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ModeAbsent, NonPositiveFrequency, ThresholdDegeneracy
from .flow_config import FlowConfig

#: relative guard band |w - Omega| < THRESHOLD_GUARD * Omega
THRESHOLD_GUARD = 1e-9


class Region(str, enum.Enum):
    Upstream = "u"
    Downstream = "d"

    @classmethod
    def parse(cls, value) -> "Region":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("u", "up", "upstream"):
            return cls.Upstream
        if v in ("d", "down", "downstream"):
            return cls.Downstream
        raise ValueError(f"unknown region {value!r}")


class Label(str, enum.Enum):
    In0 = "In0"
    Out0 = "Out0"
    In1 = "In1"
    Out1 = "Out1"
    In2 = "In2"
    Out2 = "Out2"
    EvanescentDecayUp = "EvanescentDecayUp"      # decays towards x -> -inf
    EvanescentDecayDown = "EvanescentDecayDown"  # decays towards x -> +inf
    EvanescentGrow = "EvanescentGrow"            # inadmissible in its own region


@dataclass(frozen=True)
class ChannelRoot:
    q: complex
    label: Label
    region: Region
    norm_sign: int
    v_group: float | None = None

    @property
    def is_real(self) -> bool:
        return self.v_group is not None


def region_params(config: FlowConfig, region) -> tuple[float, float]:
    """(V, c) for a uniform region."""
    region = Region.parse(region)
    if region is Region.Upstream:
        return config.V_u, config.c_u
    return config.V_d, config.c_d


def bogoliubov_omega(q, region, config: FlowConfig):
    """Comoving Bogoliubov frequency c q sqrt(1 + q^2 xi^2 / 4)."""
    _, c = region_params(config, region)
    q = np.asarray(q, dtype=float)
    xi = 1.0 / c
    return c * q * np.sqrt(1.0 + 0.25 * (q * xi) ** 2)


def threshold_wavenumber(config: FlowConfig) -> float:
    m = config.m_d
    xi_d = config.xi_d
    return math.sqrt(-2.0 + 0.5 * m * m + 0.5 * m * math.sqrt(8.0 + m * m)) / xi_d


def threshold_omega(config: FlowConfig) -> float:
    """Frequency above which the negative-norm downstream channels disappear."""
    qs = threshold_wavenumber(config)
    return float(qs * config.V_d - bogoliubov_omega(qs, Region.Downstream, config))


def quartic_coefficients(V: float, c: float, omega: float) -> np.ndarray:
    """Monic quartic q^4 - 4(V^2 - c^2) q^2 + 8 w V q - 4 w^2 (highest power first)."""
    return np.array([1.0, 0.0, -4.0 * (V * V - c * c), 8.0 * omega * V, -4.0 * omega * omega])


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    dcoeffs = np.polyder(coeffs)
    out = roots.astype(complex)
    for _ in range(steps):
        p = np.polyval(coeffs, out)
        dp = np.polyval(dcoeffs, out)
        ok = dp != 0
        out[ok] -= p[ok] / dp[ok]
    return out


def group_velocity(q: float, V: float, c: float, omega: float) -> float:
    w = omega - V * q
    return V + (c * c * q + 0.5 * q**3) / w


def _check_omega(config: FlowConfig, omega: float, guard: float = THRESHOLD_GUARD):
    if not omega > 0:
        raise NonPositiveFrequency(f"omega must be positive, got {omega}")
    Om = threshold_omega(config)
    if abs(omega - Om) < guard * Om:
        raise ThresholdDegeneracy(f"omega={omega} within {guard:g}*Omega of the threshold {Om}")
    return Om


def raw_roots(V: float, c: float, omega: float) -> np.ndarray:
    """All four roots of the dispersion quartic, Newton polished."""
    coeffs = quartic_coefficients(V, c, omega)
    return _polish(coeffs, np.roots(coeffs))


def channel_roots(config: FlowConfig, region, omega: float, guard: float = THRESHOLD_GUARD) -> list[ChannelRoot]:
    """Labelled roots of the dispersion relation at frequency ``omega``."""
    region = Region.parse(region)
    Om = _check_omega(config, omega, guard)
    V, c = region_params(config, region)
    roots = raw_roots(V, c, omega)

    if region is Region.Downstream:
        n_real = 4 if omega < Om else 2
    else:
        n_real = 2
    # the n_real roots with the smallest imaginary part are the real ones
    order = np.argsort(np.abs(roots.imag) / (1.0 + np.abs(roots)))
    real = np.sort(roots[order[:n_real]].real)
    cplx = roots[order[n_real:]]

    out = []
    for q in real:
        w = omega - V * q
        vg = group_velocity(q, V, c, omega)
        sign = 1 if w > 0 else -1
        if region is Region.Upstream:
            label = Label.Out0 if vg < 0 else Label.In0
        elif sign > 0:
            label = Label.Out1 if vg > 0 else Label.In1
        else:
            label = Label.Out2 if vg > 0 else Label.In2
        out.append(ChannelRoot(complex(q, 0.0), label, region, sign, float(vg)))
    for q in sorted(cplx, key=lambda z: z.imag):
        w = omega - V * q
        sign = 1 if w.real > 0 else -1
        if region is Region.Upstream:
            label = Label.EvanescentDecayUp if q.imag < 0 else Label.EvanescentGrow
        else:
            label = Label.EvanescentDecayDown if q.imag > 0 else Label.EvanescentGrow
        out.append(ChannelRoot(complex(q), label, region, sign, None))
    return out


def find_root(roots: list[ChannelRoot], label: Label) -> ChannelRoot:
    for r in roots:
        if r.label is label:
            return r
    raise ModeAbsent(f"channel {label.value} absent")


def q_in(config: FlowConfig, j: int, omega: float) -> float:
    """Wavenumber of the ingoing channel ``j`` (0: upstream, 1/2: downstream)."""
    if j == 2 and omega >= threshold_omega(config):
        raise ModeAbsent("the negative-norm channel does not exist above threshold")
    if j == 0:
        roots = channel_roots(config, Region.Upstream, omega)
        return find_root(roots, Label.In0).q.real
    roots = channel_roots(config, Region.Downstream, omega)
    return find_root(roots, Label.In1 if j == 1 else Label.In2).q.real


def comoving_frequency(config: FlowConfig, j: int, omega: float) -> float:
    """|omega - V q| of the ingoing channel j, i.e. omega_B(q_{j|in})."""
    q = q_in(config, j, omega)
    V = config.V_u if j == 0 else config.V_d
    return abs(omega - V * q)
