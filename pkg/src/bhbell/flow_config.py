"""Background flows of the three analogue black-hole families.

Units: hbar = m = 1, with the upstream sound speed and density set to one
(c_u = n_u = 1).  Hence xi_u = 1 and g_u n_u = 1; energies, frequencies and
temperatures are all measured in units of g_u n_u.

For the Waterfall and DeltaPeak families the upstream region (x < 0) carries a
portion of a grey soliton of the homogeneous condensate moving at V_u = m_u,

    n(x) = 1 - kappa^2 sech^2(kappa (x - x0)),    kappa = sqrt(1 - m_u^2),

while the downstream region (x > 0) is uniform.  Continuity of the current
J = n V = m_u fixes everything else:

* Waterfall: the soliton is cut at its minimum (x0 = 0) so n_d = m_u^2,
  V_d = 1/m_u and m_d = m_u^-2.  The step potential is implicit: only the
  condensate wave function enters the BdG problem.
* DeltaPeak: the interaction constant is uniform and a barrier Z delta(x) sits
  at the origin.  Equality of the chemical potential on both sides,
  m_u^2/2 + 1 = m_u^2 / (2 n_d^2) + n_d, has the physical root

      n_d = (m_u^2 / 4) (1 + sqrt(1 + 8 / m_u^2)),

  which reproduces m_d / m_u = ((-1 + sqrt(1 + 8/m_u^2)) / 2)^(3/2).  The
  soliton is shifted so that its density at the origin is n_d,
  sech^2(kappa x0) = (1 - n_d) / kappa^2 with x0 > 0, and the derivative jump
  of the wave function at the barrier gives

      Z = kappa (1 - n_d) tanh(kappa x0) / (2 n_d)   (barrier Z delta(x)).

* FlatProfile: n = 1 and V = m_u everywhere; only g jumps at x = 0, with
  g_d = c_d^2 and c_d = m_u / m_d.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import KindMismatch, OutOfRangeMach


class FlowKind(str, enum.Enum):
    Waterfall = "Waterfall"
    DeltaPeak = "DeltaPeak"
    FlatProfile = "FlatProfile"

    @classmethod
    def parse(cls, value) -> "FlowKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        aliases = {"delta": cls.DeltaPeak, "flat": cls.FlatProfile, "wf": cls.Waterfall}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown flow kind {value!r}")


@dataclass(frozen=True)
class FlowConfig:
    kind: FlowKind
    m_u: float
    m_d: float
    n_u: float
    n_d: float
    V_u: float
    V_d: float
    c_u: float
    c_d: float
    xi_u: float
    xi_d: float
    g_u: float
    g_d: float

    @property
    def kappa(self) -> float:
        """Inverse width of the upstream soliton (0 for FlatProfile)."""
        if self.kind is FlowKind.FlatProfile:
            return 0.0
        return math.sqrt(1.0 - self.m_u**2)

    @property
    def soliton_offset(self) -> float:
        """Position x0 > 0 of the (virtual) soliton centre; 0 for the waterfall."""
        if self.kind is not FlowKind.DeltaPeak:
            return 0.0
        k = self.kappa
        return math.acosh(math.sqrt(k * k / (1.0 - self.n_d))) / k

    @property
    def barrier_strength(self) -> float:
        """Amplitude Z of the point barrier Z*delta(x) (DeltaPeak only)."""
        if self.kind is not FlowKind.DeltaPeak:
            return 0.0
        k = self.kappa
        return k * (1.0 - self.n_d) * math.tanh(k * self.soliton_offset) / (2.0 * self.n_d)

    @property
    def chemical_potential(self) -> float:
        return 0.5 * self.V_u**2 + self.g_u * self.n_u

    def label(self) -> str:
        if self.kind is FlowKind.FlatProfile:
            return f"{self.kind.value}(m_u={self.m_u:g}, m_d={self.m_d:g})"
        return f"{self.kind.value}(m_u={self.m_u:g})"


def delta_peak_density(m_u: float) -> float:
    """Downstream density of the delta-peak flow for upstream Mach number m_u."""
    return 0.25 * m_u * m_u * (1.0 + math.sqrt(1.0 + 8.0 / (m_u * m_u)))


def build_config(kind, m_u: float, m_d: float | None = None) -> FlowConfig:
    """Build a fully populated flow configuration.

    Args:
        kind: ``FlowKind`` or its name.
        m_u: upstream Mach number, in (0, 1).
        m_d: downstream Mach number; required for FlatProfile only.
    """
    kind = FlowKind.parse(kind)
    m_u = float(m_u)
    if not (0.0 < m_u < 1.0) or not math.isfinite(m_u):
        raise OutOfRangeMach(f"m_u must lie in (0, 1), got {m_u}")

    if kind is FlowKind.FlatProfile:
        if m_d is None:
            raise KindMismatch("FlatProfile requires m_d")
        m_d = float(m_d)
        if not m_d > 1.0 or not math.isfinite(m_d):
            raise OutOfRangeMach(f"m_d must exceed 1, got {m_d}")
        c_d = m_u / m_d
        return FlowConfig(kind, m_u, m_d, 1.0, 1.0, m_u, m_u, 1.0, c_d,
                          1.0, 1.0 / c_d, 1.0, c_d * c_d)

    if m_d is not None:
        raise KindMismatch(f"m_d is fixed by m_u for {kind.value}; do not supply it")

    if kind is FlowKind.Waterfall:
        n_d = m_u * m_u
    else:
        n_d = delta_peak_density(m_u)
    V_d = m_u / n_d
    c_d = math.sqrt(n_d)
    return FlowConfig(kind, m_u, V_d / c_d, 1.0, n_d, m_u, V_d, 1.0, c_d,
                      1.0, 1.0 / c_d, 1.0, 1.0)


@dataclass(frozen=True)
class MeanFieldReport:
    valid: bool
    left_margin: float
    right_margin: float
    strictness: float


def check_1d_mean_field(a_over_aperp: float, n_typ_a: float, strictness: float = 10.0) -> MeanFieldReport:
    """Check (a/a_perp)^2 << n a << 1, each inequality by at least ``strictness``."""
    if a_over_aperp <= 0 or n_typ_a <= 0:
        raise ValueError("inputs must be positive")
    left = n_typ_a / a_over_aperp**2
    right = 1.0 / n_typ_a
    return MeanFieldReport(bool(left >= strictness and right >= strictness), left, right, strictness)


def background_profile(config: FlowConfig, x):
    """Density and velocity of the stationary flow at position(s) ``x``."""
    x = np.asarray(x, dtype=float)
    if config.kind is FlowKind.FlatProfile:
        return np.ones_like(x) * config.n_u, np.ones_like(x) * config.V_u
    k = config.kappa
    # clip keeps cosh finite far upstream, where the profile is already flat
    arg = np.clip(k * (x - config.soliton_offset), -350.0, 350.0)
    n_up = 1.0 - k * k / np.cosh(arg) ** 2
    n = np.where(x >= 0, config.n_d, n_up)
    return n, config.m_u / n
