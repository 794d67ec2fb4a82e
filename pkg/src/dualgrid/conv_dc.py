"""Averaged DC half-bridge with PI current control and I-V droop.

States are SI: inductor current ``i_f``, output voltage ``v_o`` and the lagged
switch voltage ``v_pwm``. The load is an ideal, steppable current sink ``i_o``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from dualgrid.core import PerUnitBase
from dualgrid.params import ConverterParams
from dualgrid.plant import PlantKind, PlantParams
from dualgrid.simcore import ConverterModel, DiscretePi, SimConfig, UnknownSignalError, pi_update
from dualgrid.tuning import DcDroopParams

__all__ = [
    "DcConverterModel",
    "DC_SIGNALS",
    "dc_droop_law",
    "dc_derivatives",
    "build_dc_scenario",
]

DC_SIGNALS = ("i_f_A", "i_f_ref_A", "v_o_V", "v_o_pu", "i_o_A", "duty")

# parameter vector layout
L_F, C_DC, V_IN, TAU, I_BASE, V_BASE, KP, KI_TS, PI_LIM, K_D, V_SET, I_SET, DROOP_ON, I_O = range(14)
N_PRM = 14
# controller vector layout
ACC, DUTY, I_REF = range(3)


@njit(cache=True, nogil=True)
def _droop(v_o_pu, k_d, v_set, i_f_set):
    return i_f_set + k_d * (v_set - v_o_pu)


def dc_droop_law(v_o_pu: float, params: DcDroopParams, v_set: float, i_f_set: float) -> float:
    """Current reference in p.u. from the measured output voltage in p.u."""
    return _droop(v_o_pu, params.k_d_dc, v_set, i_f_set)


@njit(cache=True, nogil=True)
def _deriv(x, duty, i_o, prm, out):
    out[0] = (x[2] - x[1]) / prm[L_F]
    out[1] = (x[0] - i_o) / prm[C_DC]
    out[2] = (duty * prm[V_IN] - x[2]) / prm[TAU]


def dc_derivatives(states, inputs, prm: np.ndarray) -> np.ndarray:
    """d/dt of (i_f, v_o, v_pwm) for inputs (duty, i_o) and a model parameter vector."""
    out = np.empty(3)
    duty, i_o = inputs
    _deriv(np.asarray(states, dtype=float), float(duty), float(i_o), prm, out)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite DC converter derivative")
    return out


@njit(cache=True, nogil=True)
def _control(x, ctl, prm):
    v_o = x[1]
    if prm[DROOP_ON] != 0.0:
        i_ref_pu = _droop(v_o / prm[V_BASE], prm[K_D], prm[V_SET], prm[I_SET])
    else:
        i_ref_pu = prm[I_SET]
    i_ref = i_ref_pu * prm[I_BASE]
    u = pi_update(ctl, ACC, prm[KP], prm[KI_TS], prm[PI_LIM], i_ref - x[0])
    duty = (u + v_o) / prm[V_IN]
    if duty < 0.0:
        duty = 0.0
    elif duty > 1.0:
        duty = 1.0
    ctl[DUTY] = duty
    ctl[I_REF] = i_ref


@njit(cache=True, nogil=True)
def _advance(x, ctl, prm, k0, k1, n_total, dt, n_sub, dec, rec):
    n = x.shape[0]
    k1_ = np.empty(n)
    k2_ = np.empty(n)
    k3_ = np.empty(n)
    k4_ = np.empty(n)
    xt = np.empty(n)
    for k in range(k0, k1):
        if k % n_sub == 0:
            _control(x, ctl, prm)
        if k % dec == 0:
            r = k // dec
            rec[0, r] = x[0]
            rec[1, r] = ctl[I_REF]
            rec[2, r] = x[1]
            rec[3, r] = x[1] / prm[V_BASE]
            rec[4, r] = prm[I_O]
            rec[5, r] = ctl[DUTY]
        if k >= n_total:
            continue
        d = ctl[DUTY]
        i_o = prm[I_O]
        _deriv(x, d, i_o, prm, k1_)
        for j in range(n):
            xt[j] = x[j] + 0.5 * dt * k1_[j]
        _deriv(xt, d, i_o, prm, k2_)
        for j in range(n):
            xt[j] = x[j] + 0.5 * dt * k2_[j]
        _deriv(xt, d, i_o, prm, k3_)
        for j in range(n):
            xt[j] = x[j] + dt * k3_[j]
        _deriv(xt, d, i_o, prm, k4_)
        ok = True
        for j in range(n):
            x[j] = x[j] + (dt / 6.0) * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j])
            if not np.isfinite(x[j]):
                ok = False
        if not ok:
            return k + 1
    return -1


class DcConverterModel(ConverterModel):
    signal_names = DC_SIGNALS
    steppable = ("i_o_A", "i_f_set_pu", "v_set_pu")

    def __init__(
        self,
        plant: PlantParams,
        cc: DiscretePi,
        droop: DcDroopParams,
        base: PerUnitBase,
        *,
        v_set: float,
        i_f_set: float,
        i_o: float,
        states: tuple[float, float, float],
        pwm_tau: float,
        t_sample: float,
        droop_enabled: bool = True,
    ):
        if plant.kind is not PlantKind.DC:
            raise ValueError("DC model needs a DC plant")
        self.plant = plant
        self.cc = cc
        self.droop = droop
        self.base = base
        self.pwm_tau = pwm_tau
        self.t_sample = t_sample
        self.droop_enabled = droop_enabled
        self.x = np.array(states, dtype=float)
        self.ctl = np.zeros(3)
        self.ctl[ACC] = cc.acc
        self.ctl[DUTY] = (states[1] + cc.acc) / plant.v_in
        self.ctl[I_REF] = states[0]
        self.prm = np.zeros(N_PRM)
        self.prm[L_F] = plant.l_f
        self.prm[C_DC] = plant.c_out
        self.prm[V_IN] = plant.v_in
        self.prm[TAU] = pwm_tau
        self.prm[I_BASE] = base.i_base
        self.prm[V_BASE] = base.v_base
        self.prm[KP] = cc.gains.k_p
        self.prm[KI_TS] = cc.gains.k_i * t_sample
        self.prm[PI_LIM] = math.inf if cc.limit is None else abs(cc.limit)
        self.prm[K_D] = droop.k_d_dc
        self.prm[V_SET] = v_set
        self.prm[I_SET] = i_f_set
        self.prm[DROOP_ON] = 1.0 if droop_enabled else 0.0
        self.prm[I_O] = i_o

    @property
    def i_o(self) -> float:
        return float(self.prm[I_O])

    @property
    def i_f_set(self) -> float:
        return float(self.prm[I_SET])

    @property
    def v_set(self) -> float:
        return float(self.prm[V_SET])

    @property
    def duty(self) -> float:
        return float(self.ctl[DUTY])

    def derivatives(self, x: np.ndarray) -> np.ndarray:
        """Plant derivative with the currently held duty and load; for RK4 cross-checks."""
        return dc_derivatives(x, (self.ctl[DUTY], self.prm[I_O]), self.prm)

    def set_input(self, name: str, value: float) -> None:
        idx = {"i_o_A": I_O, "i_f_set_pu": I_SET, "v_set_pu": V_SET}.get(name)
        if idx is None:
            raise UnknownSignalError(f"{name!r} is not a steppable DC input")
        self.prm[idx] = value

    def advance(self, k0: int, k1: int, config: SimConfig, rec: np.ndarray) -> int:
        self._check_sampling(config)
        bad = _advance(
            self.x, self.ctl, self.prm, k0, k1, config.n_steps, config.dt,
            config.substeps, config.record_decimation, rec,
        )
        self.cc.acc = float(self.ctl[ACC])
        return bad

    def _check_sampling(self, config: SimConfig) -> None:
        if not math.isclose(config.t_sample, self.t_sample, rel_tol=1e-9):
            raise ValueError(
                f"model was tuned for t_sample={self.t_sample}, config uses {config.t_sample}"
            )


def build_dc_scenario(
    operating_point: dict,
    overrides: dict | None = None,
    *,
    params: ConverterParams | None = None,
    droop_enabled: bool = True,
) -> DcConverterModel:
    """DC converter initialized at steady state for ``{"p_o": W, "v_o": V}``.

    ``overrides`` replaces fields of :class:`ConverterParams`.
    """
    params = (params or ConverterParams()).replace(**(overrides or {}))
    p_o = float(operating_point["p_o"])
    v_o = float(operating_point["v_o"])
    if not v_o > 0 or p_o < 0:
        raise ValueError(f"inconsistent operating point {operating_point}")
    i_o = p_o / v_o
    if "i_o" in operating_point and not math.isclose(operating_point["i_o"], i_o, rel_tol=1e-9):
        raise ValueError(f"inconsistent operating point: p_o != v_o * i_o in {operating_point}")
    if v_o > params.v_in:
        raise ValueError(f"output voltage {v_o} V exceeds input voltage {params.v_in} V")

    base = params.base
    plant = PlantParams(params.v_in, params.l_f, params.c_dc, PlantKind.DC)
    # ideal feedforward of v_o carries the whole steady-state switch voltage
    cc = DiscretePi(params.current_gains(), acc=0.0)
    return DcConverterModel(
        plant,
        cc,
        params.dc_droop(),
        base,
        v_set=v_o / base.v_base,
        i_f_set=i_o / base.i_base,
        i_o=i_o,
        states=(i_o, v_o, v_o),
        pwm_tau=params.tau_pwm,
        t_sample=params.t_sample,
        droop_enabled=droop_enabled,
    )
