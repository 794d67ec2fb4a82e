"""Physical and controller parameters shared by both converter models."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from dualgrid.core import PerUnitBase, pu_base_new
from dualgrid.tuning import (
    AcDroopParams,
    DcDroopParams,
    PiGains,
    current_bandwidth,
    duality_map,
    tune_current_controller,
    tune_voltage_controller,
)

__all__ = ["ConverterParams", "ac_peak_bases"]


@dataclass(frozen=True)
class ConverterParams:
    """Defaults reproduce the 2 kW / 700 V -> 350 V reference setup."""

    v_in: float = 700.0
    l_f: float = 7.7e-3
    c_f: float = 0.72e-3
    c_dc: float = 72e-3
    s_base: float = 4000.0
    v_base: float = 350.0
    f_nom: float = 50.0
    f_s: float = 50e3
    omega_bi: float | None = None  # None: 1 % of the switching frequency
    c_i: float = 20.0
    omega_bv: float | None = None  # None: bv_ratio * omega_bi
    bv_ratio: float = 0.2
    c_v: float = 2.5
    k_d_dc: float = 0.75
    t_sample: float = 1e-5
    pwm_tau: float | None = None  # None: one sampling period

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is not None and not value > 0:
                raise ValueError(f"{f.name} must be strictly positive, got {value!r}")

    def replace(self, **changes) -> ConverterParams:
        return dataclasses.replace(self, **changes)

    @property
    def base(self) -> PerUnitBase:
        return pu_base_new(self.s_base, self.v_base)

    @property
    def omega_current(self) -> float:
        return self.omega_bi if self.omega_bi is not None else current_bandwidth(self.f_s)

    @property
    def omega_voltage(self) -> float:
        return self.omega_bv if self.omega_bv is not None else self.bv_ratio * self.omega_current

    @property
    def tau_pwm(self) -> float:
        return self.pwm_tau if self.pwm_tau is not None else self.t_sample

    @property
    def omega_nom(self) -> float:
        return 2.0 * math.pi * self.f_nom

    def current_gains(self) -> PiGains:
        return tune_current_controller(self.l_f, self.omega_current, self.c_i)

    def voltage_gains(self) -> PiGains:
        return tune_voltage_controller(self.c_f, self.omega_voltage, self.c_v)

    def dc_droop(self) -> DcDroopParams:
        return DcDroopParams(k_d_dc=self.k_d_dc, c_dc_pu=self.base.capacitance_time(self.c_dc))

    def ac_droop(self) -> AcDroopParams:
        return duality_map(self.c_dc, self.k_d_dc, self.base)


def ac_peak_bases(base: PerUnitBase) -> tuple[float, float]:
    """(voltage, current) bases for amplitude-invariant dq quantities.

    ``v_base`` is read as an RMS line-to-line voltage; the dq bases are phase
    peaks, chosen so that 1.5 * v * i equals ``s_base``.
    """
    v_pk = base.v_base * math.sqrt(2.0 / 3.0)
    return v_pk, 2.0 * base.s_base / (3.0 * v_pk)
