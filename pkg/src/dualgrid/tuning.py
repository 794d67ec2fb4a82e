"""IMC PI tuning, droop <-> swing-equation mapping and the AC/DC duality mapper."""

from __future__ import annotations

import math
from dataclasses import dataclass

from dualgrid.core import PerUnitBase, RationalTF

__all__ = [
    "PiGains",
    "AcDroopParams",
    "DcDroopParams",
    "TimescaleReport",
    "tune_current_controller",
    "tune_voltage_controller",
    "swing_from_droop",
    "droop_from_swing",
    "duality_map",
    "timescale_check",
    "current_bandwidth",
]


@dataclass(frozen=True)
class PiGains:
    """k_p * (1 + s*t_i) / (s*t_i). ``t_i = inf`` disables the integrator."""

    k_p: float
    t_i: float

    def __post_init__(self):
        if not (self.k_p > 0 and self.t_i > 0):
            raise ValueError(f"PI gains must be positive: {self}")

    @property
    def k_i(self) -> float:
        return self.k_p / self.t_i

    def tf(self) -> RationalTF:
        return RationalTF.pi(self.k_p, self.t_i)


def _require_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ValueError(f"{name} must be strictly positive, got {value!r}")


def tune_current_controller(l_f: float, omega_bi: float, c_i: float) -> PiGains:
    _require_positive(l_f=l_f, omega_bi=omega_bi, c_i=c_i)
    return PiGains(k_p=omega_bi * l_f, t_i=c_i / omega_bi)


def tune_voltage_controller(c_f: float, omega_bv: float, c_v: float) -> PiGains:
    _require_positive(c_f=c_f, omega_bv=omega_bv, c_v=c_v)
    return PiGains(k_p=omega_bv * c_f, t_i=c_v / omega_bv)


def current_bandwidth(f_s: float, fraction: float = 0.01) -> float:
    """Current-loop bandwidth as a fraction of the switching frequency, in rad/s."""
    return fraction * 2.0 * math.pi * f_s


@dataclass(frozen=True)
class AcDroopParams:
    m_p: float
    omega_c: float
    h: float
    k_d_ac: float

    def __post_init__(self):
        _require_positive(m_p=self.m_p, omega_c=self.omega_c, h=self.h, k_d_ac=self.k_d_ac)
        h, k_d = swing_from_droop(self.m_p, self.omega_c)
        if not (math.isclose(self.h, h, rel_tol=1e-12) and math.isclose(self.k_d_ac, k_d, rel_tol=1e-12)):
            raise ValueError(f"inconsistent droop/swing parameters: {self}")

    @classmethod
    def from_droop(cls, m_p: float, omega_c: float) -> AcDroopParams:
        h, k_d = swing_from_droop(m_p, omega_c)
        return cls(m_p=m_p, omega_c=omega_c, h=h, k_d_ac=k_d)

    @classmethod
    def from_swing(cls, h: float, k_d_ac: float) -> AcDroopParams:
        m_p, omega_c = droop_from_swing(h, k_d_ac)
        return cls(m_p=m_p, omega_c=omega_c, h=h, k_d_ac=k_d_ac)


@dataclass(frozen=True)
class DcDroopParams:
    k_d_dc: float
    c_dc_pu: float

    def __post_init__(self):
        _require_positive(k_d_dc=self.k_d_dc, c_dc_pu=self.c_dc_pu)


def swing_from_droop(m_p: float, omega_c: float) -> tuple[float, float]:
    """(m_p, omega_c) -> (H, K_d) with H = 1/(2 omega_c m_p), K_d = 1/m_p."""
    _require_positive(m_p=m_p, omega_c=omega_c)
    return 1.0 / (2.0 * omega_c * m_p), 1.0 / m_p


def droop_from_swing(h: float, k_d_ac: float) -> tuple[float, float]:
    _require_positive(h=h, k_d_ac=k_d_ac)
    m_p = 1.0 / k_d_ac
    return m_p, 1.0 / (2.0 * h * m_p)


def duality_map(c_dc: float, k_d_dc: float, base: PerUnitBase) -> AcDroopParams:
    """AC droop parameters dual to a DC I-V droop converter: 2H = C_dc(p.u.), K_d equal."""
    _require_positive(c_dc=c_dc, k_d_dc=k_d_dc)
    c_dc_pu = base.capacitance_time(c_dc)
    h = c_dc_pu / 2.0
    k_d_ac = k_d_dc
    m_p = 1.0 / k_d_ac
    omega_c = 1.0 / (2.0 * h * m_p)
    return AcDroopParams(m_p=m_p, omega_c=omega_c, h=h, k_d_ac=k_d_ac)


@dataclass(frozen=True)
class TimescaleReport:
    ok: bool
    ratio: float
    ratio_min: float
    omega_c: float
    omega_bv: float

    def __str__(self):
        verdict = "ok" if self.ok else "insufficient"
        return (
            f"omega_bv/omega_c = {self.ratio:.1f} (min {self.ratio_min:g}): {verdict} "
            "separation between voltage loop and droop filter"
        )


def timescale_check(omega_c: float, omega_bv: float, ratio_min: float = 100.0) -> TimescaleReport:
    _require_positive(omega_c=omega_c, omega_bv=omega_bv, ratio_min=ratio_min)
    ratio = omega_bv / omega_c
    return TimescaleReport(ratio >= ratio_min, ratio, ratio_min, omega_c, omega_bv)
