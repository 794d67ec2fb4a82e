"""Averaged three-phase grid-forming inverter.

The plant is integrated in abc (inductor currents, capacitor voltages, lagged
switch voltages); the controller works in the dq frame set by the droop angle:
P-omega droop with a power low-pass, PI voltage control and PI current control,
both with dq decoupling and output-voltage feedforward.

Park convention (amplitude invariant): x_dq = (2/3) * (x_a + a x_b + a^2 x_c) * e^{-j theta},
so ``X cos(theta)`` maps to (X, 0) and ``-X sin(theta)`` to (0, X).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from dualgrid.core import PerUnitBase
from dualgrid.params import ConverterParams, ac_peak_bases
from dualgrid.plant import PlantKind, PlantParams
from dualgrid.simcore import ConverterModel, DiscretePi, SimConfig, UnknownSignalError, pi_update
from dualgrid.tuning import AcDroopParams

__all__ = [
    "AcConverterModel",
    "AC_SIGNALS",
    "DroopState",
    "park_transform",
    "inverse_park",
    "ac_droop_step",
    "ac_voltage_control",
    "ac_current_control",
    "instantaneous_power",
    "build_ac_scenario",
]

AC_SIGNALS = (
    "i_f_d_A", "i_f_q_A", "i_f_d_ref_A", "v_o_d_V", "v_o_q_V", "v_o_mag_pu",
    "omega_pu", "p_o_W", "p_o_pu", "q_o_var", "theta_rad", "duty_d", "duty_q",
)

TWO_PI = 2.0 * math.pi
_SHIFT = TWO_PI / 3.0

# parameter vector layout
(L_F, C_F, V_IN, TAU, R_LOAD, V_PK_BASE, I_PK_BASE, S_BASE, W_NOM, T_S,
 KP_C, KI_C, LIM_C, KP_V, KI_V, LIM_V, M_P, W_C, W_SET, P_SET, V_SET,
 VC_ON, DROOP_ON, I_D_SET, I_Q_HOLD, DUTY_LIM) = range(26)
N_PRM = 26
# controller vector layout
(ACC_CD, ACC_CQ, ACC_VD, ACC_VQ, THETA, OMEGA, P_FILT, DUTY_D, DUTY_Q,
 IREF_D, IREF_Q, K_LAST, DA, DB, DC) = range(15)
N_CTL = 15


@njit(cache=True, nogil=True)
def _park(a, b, c, theta):
    ca = math.cos(theta)
    cb = math.cos(theta - _SHIFT)
    cc = math.cos(theta + _SHIFT)
    sa = math.sin(theta)
    sb = math.sin(theta - _SHIFT)
    sc = math.sin(theta + _SHIFT)
    d = (2.0 / 3.0) * (a * ca + b * cb + c * cc)
    q = -(2.0 / 3.0) * (a * sa + b * sb + c * sc)
    return d, q


@njit(cache=True, nogil=True)
def _inv_park(d, q, theta):
    a = d * math.cos(theta) - q * math.sin(theta)
    b = d * math.cos(theta - _SHIFT) - q * math.sin(theta - _SHIFT)
    c = d * math.cos(theta + _SHIFT) - q * math.sin(theta + _SHIFT)
    return a, b, c


def park_transform(x_abc, theta: float) -> tuple[float, float]:
    a, b, c = (float(v) for v in x_abc)
    return _park(a, b, c, float(theta))


def inverse_park(x_dq, theta: float) -> tuple[float, float, float]:
    d, q = (float(v) for v in x_dq)
    return _inv_park(d, q, float(theta))


def instantaneous_power(v_abc, i_abc) -> float:
    return float(np.dot(np.asarray(v_abc, dtype=float), np.asarray(i_abc, dtype=float)))


class DroopState:
    """Droop integrator state; ``p_filt`` starts at the measured power."""

    def __init__(self, p_filt: float, omega: float = 1.0):
        self.p_filt = p_filt
        self.omega = omega


@njit(cache=True, nogil=True)
def _droop_step(p_meas, p_filt, m_p, w_c, w_set, p_set, dt):
    p_filt = p_filt + w_c * (p_meas - p_filt) * dt
    return p_filt, w_set + m_p * (p_set - p_filt)


def ac_droop_step(
    p_meas: float,
    state: DroopState,
    params: AcDroopParams,
    setpoints: dict,
    dt: float,
    f_nom: float = 50.0,
) -> tuple[float, float]:
    """Advance the power filter one sample; returns (omega p.u., theta increment rad).

    ``setpoints`` holds ``omega_set`` and ``p_set`` in p.u.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    state.p_filt, state.omega = _droop_step(
        p_meas, state.p_filt, params.m_p, params.omega_c,
        setpoints["omega_set"], setpoints["p_set"], dt,
    )
    return state.omega, state.omega * TWO_PI * f_nom * dt


@njit(cache=True, nogil=True)
def _vc_law(v_d, v_q, v_d_set, w_el, c_f, acc, kp, ki_ts, lim):
    i_ref_d = pi_update(acc, 0, kp, ki_ts, lim, v_d_set - v_d) - w_el * c_f * v_q
    i_ref_q = pi_update(acc, 1, kp, ki_ts, lim, 0.0 - v_q) + w_el * c_f * v_d
    return i_ref_d, i_ref_q


@njit(cache=True, nogil=True)
def _cc_law(i_d, i_q, i_ref_d, i_ref_q, v_d, v_q, w_el, l_f, acc, kp, ki_ts, lim):
    v_sw_d = pi_update(acc, 0, kp, ki_ts, lim, i_ref_d - i_d) - w_el * l_f * i_q + v_d
    v_sw_q = pi_update(acc, 1, kp, ki_ts, lim, i_ref_q - i_q) + w_el * l_f * i_d + v_q
    return v_sw_d, v_sw_q


def _pair_step(vc_d: DiscretePi, vc_q: DiscretePi, t_sample: float, law, *args):
    if vc_d.gains != vc_q.gains or vc_d.limit != vc_q.limit:
        raise ValueError("d and q controllers must share gains")
    acc = np.array([vc_d.acc, vc_q.acc])
    lim = math.inf if vc_d.limit is None else abs(vc_d.limit)
    out = law(*args, acc, vc_d.gains.k_p, vc_d.gains.k_i * t_sample, lim)
    vc_d.acc, vc_q.acc = float(acc[0]), float(acc[1])
    return out


def ac_voltage_control(
    v_dq, v_d_set: float, vc_d: DiscretePi, vc_q: DiscretePi, omega_el: float, c_f: float, t_sample: float
) -> tuple[float, float]:
    """Current references (A) from dq voltages (V); q-axis voltage is regulated to zero."""
    return _pair_step(vc_d, vc_q, t_sample, _vc_law, float(v_dq[0]), float(v_dq[1]), v_d_set, omega_el, c_f)


def ac_current_control(
    i_dq, i_ref_dq, cc_d: DiscretePi, cc_q: DiscretePi, v_dq, omega_el: float, l_f: float,
    v_in: float, t_sample: float,
) -> tuple[float, float]:
    """dq duty ratios (switch voltage / v_in) with decoupling and voltage feedforward."""
    v_sw_d, v_sw_q = _pair_step(
        cc_d, cc_q, t_sample, _cc_law, float(i_dq[0]), float(i_dq[1]),
        float(i_ref_dq[0]), float(i_ref_dq[1]), float(v_dq[0]), float(v_dq[1]), omega_el, l_f,
    )
    return v_sw_d / v_in, v_sw_q / v_in


@njit(cache=True, nogil=True)
def _deriv(x, da, db, dc, prm, out):
    l_f = prm[L_F]
    c_f = prm[C_F]
    g = 1.0 / prm[R_LOAD]
    tau = prm[TAU]
    # floating neutral: the common-mode part of the duty ratios drives no current
    cm = (da + db + dc) / 3.0
    v_in = prm[V_IN]
    out[0] = (x[6] - x[3]) / l_f
    out[1] = (x[7] - x[4]) / l_f
    out[2] = (x[8] - x[5]) / l_f
    out[3] = (x[0] - g * x[3]) / c_f
    out[4] = (x[1] - g * x[4]) / c_f
    out[5] = (x[2] - g * x[5]) / c_f
    out[6] = (v_in * (da - cm) - x[6]) / tau
    out[7] = (v_in * (db - cm) - x[7]) / tau
    out[8] = (v_in * (dc - cm) - x[8]) / tau


@njit(cache=True, nogil=True)
def _clamp(x, lim):
    if x > lim:
        return lim
    if x < -lim:
        return -lim
    return x


@njit(cache=True, nogil=True)
def _control(x, ctl, prm, k):
    ts = prm[T_S]
    if ctl[K_LAST] >= 0.0:
        theta = ctl[THETA] + ctl[OMEGA] * prm[W_NOM] * ts
        if theta >= TWO_PI:
            theta -= TWO_PI
        elif theta < 0.0:
            theta += TWO_PI
        ctl[THETA] = theta
    ctl[K_LAST] = k
    theta = ctl[THETA]

    v_d, v_q = _park(x[3], x[4], x[5], theta)
    i_d, i_q = _park(x[0], x[1], x[2], theta)
    g = 1.0 / prm[R_LOAD]
    p_pu = g * (x[3] * x[3] + x[4] * x[4] + x[5] * x[5]) / prm[S_BASE]

    if prm[DROOP_ON] != 0.0:
        p_filt, omega = _droop_step(p_pu, ctl[P_FILT], prm[M_P], prm[W_C], prm[W_SET], prm[P_SET], ts)
        ctl[P_FILT] = p_filt
    else:
        omega = prm[W_SET]
    ctl[OMEGA] = omega
    w_el = omega * prm[W_NOM]

    if prm[VC_ON] != 0.0:
        i_ref_d, i_ref_q = _vc_law(
            v_d, v_q, prm[V_SET] * prm[V_PK_BASE], w_el, prm[C_F],
            ctl[ACC_VD:ACC_VQ + 1], prm[KP_V], prm[KI_V], prm[LIM_V],
        )
    else:
        i_ref_d = prm[I_D_SET]
        i_ref_q = prm[I_Q_HOLD]
    ctl[IREF_D] = i_ref_d
    ctl[IREF_Q] = i_ref_q

    v_sw_d, v_sw_q = _cc_law(
        i_d, i_q, i_ref_d, i_ref_q, v_d, v_q, w_el, prm[L_F],
        ctl[ACC_CD:ACC_CQ + 1], prm[KP_C], prm[KI_C], prm[LIM_C],
    )
    duty_d = v_sw_d / prm[V_IN]
    duty_q = v_sw_q / prm[V_IN]
    ctl[DUTY_D] = duty_d
    ctl[DUTY_Q] = duty_q
    # advance the modulation angle by the hold (Ts/2) and modulator lag (tau)
    theta_mod = theta + w_el * (0.5 * ts + prm[TAU])
    da, db, dc = _inv_park(duty_d, duty_q, theta_mod)
    lim = prm[DUTY_LIM]
    ctl[DA] = _clamp(da, lim)
    ctl[DB] = _clamp(db, lim)
    ctl[DC] = _clamp(dc, lim)


@njit(cache=True, nogil=True)
def _record(x, ctl, prm, k, dt, rec, r):
    theta = ctl[THETA] + ctl[OMEGA] * prm[W_NOM] * (k - ctl[K_LAST]) * dt
    theta = theta % TWO_PI
    v_d, v_q = _park(x[3], x[4], x[5], theta)
    i_d, i_q = _park(x[0], x[1], x[2], theta)
    g = 1.0 / prm[R_LOAD]
    p = g * (x[3] * x[3] + x[4] * x[4] + x[5] * x[5])
    rec[0, r] = i_d
    rec[1, r] = i_q
    rec[2, r] = ctl[IREF_D]
    rec[3, r] = v_d
    rec[4, r] = v_q
    rec[5, r] = math.sqrt(v_d * v_d + v_q * v_q) / prm[V_PK_BASE]
    rec[6, r] = ctl[OMEGA]
    rec[7, r] = p
    rec[8, r] = p / prm[S_BASE]
    # load current is v/R, so q = 1.5 (v_q i_od - v_d i_oq) vanishes for a resistor
    rec[9, r] = 1.5 * (v_q * v_d * g - v_d * v_q * g)
    rec[10, r] = theta
    rec[11, r] = ctl[DUTY_D]
    rec[12, r] = ctl[DUTY_Q]


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
            _control(x, ctl, prm, k)
        if k % dec == 0:
            _record(x, ctl, prm, k, dt, rec, k // dec)
        if k >= n_total:
            continue
        da = ctl[DA]
        db = ctl[DB]
        dc = ctl[DC]
        _deriv(x, da, db, dc, prm, k1_)
        for j in range(n):
            xt[j] = x[j] + 0.5 * dt * k1_[j]
        _deriv(xt, da, db, dc, prm, k2_)
        for j in range(n):
            xt[j] = x[j] + 0.5 * dt * k2_[j]
        _deriv(xt, da, db, dc, prm, k3_)
        for j in range(n):
            xt[j] = x[j] + dt * k3_[j]
        _deriv(xt, da, db, dc, prm, k4_)
        ok = True
        for j in range(n):
            x[j] = x[j] + (dt / 6.0) * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j])
            if not np.isfinite(x[j]):
                ok = False
        if not ok:
            return k + 1
    return -1


class AcConverterModel(ConverterModel):
    signal_names = AC_SIGNALS
    steppable = ("r_load_ohm", "p_set_pu", "v_set_pu", "omega_set_pu", "i_f_d_set_pu")

    def __init__(
        self,
        plant: PlantParams,
        cc: tuple[DiscretePi, DiscretePi],
        vc: tuple[DiscretePi, DiscretePi],
        droop: AcDroopParams,
        base: PerUnitBase,
        *,
        f_nom: float,
        omega_set: float,
        p_set: float,
        v_set: float,
        r_load: float,
        states: np.ndarray,
        theta: float,
        p_filt: float,
        i_ref_dq: tuple[float, float],
        pwm_tau: float,
        t_sample: float,
        voltage_loop: bool = True,
        droop_enabled: bool = True,
        duty_limit: float = 0.5,
    ):
        if plant.kind is not PlantKind.AC_DQ_AXIS:
            raise ValueError("AC model needs an AC dq-axis plant")
        if cc[0].gains != cc[1].gains or vc[0].gains != vc[1].gains:
            raise ValueError("d and q axes use identical controller gains")
        self.plant = plant
        self.cc_d, self.cc_q = cc
        self.vc_d, self.vc_q = vc
        self.droop = droop
        self.base = base
        self.f_nom = f_nom
        self.pwm_tau = pwm_tau
        self.t_sample = t_sample
        self.v_pk_base, self.i_pk_base = ac_peak_bases(base)
        self.x = np.array(states, dtype=float)
        if self.x.shape != (9,):
            raise ValueError("AC state vector is (i_abc, v_abc, v_pwm_abc)")

        prm = np.zeros(N_PRM)
        prm[L_F] = plant.l_f
        prm[C_F] = plant.c_out
        prm[V_IN] = plant.v_in
        prm[TAU] = pwm_tau
        prm[R_LOAD] = r_load
        prm[V_PK_BASE] = self.v_pk_base
        prm[I_PK_BASE] = self.i_pk_base
        prm[S_BASE] = base.s_base
        prm[W_NOM] = TWO_PI * f_nom
        prm[T_S] = t_sample
        prm[KP_C] = self.cc_d.gains.k_p
        prm[KI_C] = self.cc_d.gains.k_i * t_sample
        prm[LIM_C] = math.inf if self.cc_d.limit is None else abs(self.cc_d.limit)
        prm[KP_V] = self.vc_d.gains.k_p
        prm[KI_V] = self.vc_d.gains.k_i * t_sample
        prm[LIM_V] = math.inf if self.vc_d.limit is None else abs(self.vc_d.limit)
        prm[M_P] = droop.m_p
        prm[W_C] = droop.omega_c
        prm[W_SET] = omega_set
        prm[P_SET] = p_set
        prm[V_SET] = v_set
        prm[VC_ON] = 1.0 if voltage_loop else 0.0
        prm[DROOP_ON] = 1.0 if droop_enabled else 0.0
        prm[I_D_SET] = i_ref_dq[0]
        prm[I_Q_HOLD] = i_ref_dq[1]
        prm[DUTY_LIM] = duty_limit
        self.prm = prm

        ctl = np.zeros(N_CTL)
        ctl[ACC_CD], ctl[ACC_CQ] = self.cc_d.acc, self.cc_q.acc
        ctl[ACC_VD], ctl[ACC_VQ] = self.vc_d.acc, self.vc_q.acc
        ctl[THETA] = theta % TWO_PI
        ctl[OMEGA] = omega_set
        ctl[P_FILT] = p_filt
        ctl[IREF_D], ctl[IREF_Q] = i_ref_dq
        ctl[K_LAST] = -1.0
        self.ctl = ctl

    @property
    def r_load(self) -> float:
        return float(self.prm[R_LOAD])

    @property
    def theta(self) -> float:
        return float(self.ctl[THETA])

    @property
    def omega(self) -> float:
        return float(self.ctl[OMEGA])

    @property
    def droop_state(self) -> DroopState:
        return DroopState(float(self.ctl[P_FILT]), float(self.ctl[OMEGA]))

    def dq_state(self) -> dict[str, float]:
        """Park-transformed plant state at the current controller angle."""
        th = self.theta
        i_d, i_q = _park(self.x[0], self.x[1], self.x[2], th)
        v_d, v_q = _park(self.x[3], self.x[4], self.x[5], th)
        return {"i_d": i_d, "i_q": i_q, "v_d": v_d, "v_q": v_q}

    def derivatives(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(9)
        _deriv(np.asarray(x, dtype=float), self.ctl[DA], self.ctl[DB], self.ctl[DC], self.prm, out)
        return out

    def set_input(self, name: str, value: float) -> None:
        if name == "r_load_ohm":
            if not value > 0:
                raise ValueError("load resistance must be positive")
            self.prm[R_LOAD] = value
        elif name == "p_set_pu":
            self.prm[P_SET] = value
        elif name == "v_set_pu":
            self.prm[V_SET] = value
        elif name == "omega_set_pu":
            self.prm[W_SET] = value
        elif name == "i_f_d_set_pu":
            self.prm[I_D_SET] = value * self.i_pk_base
        else:
            raise UnknownSignalError(f"{name!r} is not a steppable AC input")

    def advance(self, k0: int, k1: int, config: SimConfig, rec: np.ndarray) -> int:
        if not math.isclose(config.t_sample, self.t_sample, rel_tol=1e-9):
            raise ValueError(
                f"model was tuned for t_sample={self.t_sample}, config uses {config.t_sample}"
            )
        bad = _advance(
            self.x, self.ctl, self.prm, k0, k1, config.n_steps, config.dt,
            config.substeps, config.record_decimation, rec,
        )
        self.cc_d.acc, self.cc_q.acc = float(self.ctl[ACC_CD]), float(self.ctl[ACC_CQ])
        self.vc_d.acc, self.vc_q.acc = float(self.ctl[ACC_VD]), float(self.ctl[ACC_VQ])
        return bad


def build_ac_scenario(
    operating_point: dict,
    overrides: dict | None = None,
    *,
    params: ConverterParams | None = None,
    droop: AcDroopParams | None = None,
    voltage_loop: bool = True,
    droop_enabled: bool = True,
) -> AcConverterModel:
    """Inverter at steady state for ``{"p_o": W, "v_ll_rms": V}`` feeding a resistor.

    Droop parameters default to the dual of the DC converter described by ``params``.
    """
    params = (params or ConverterParams()).replace(**(overrides or {}))
    p_o = float(operating_point["p_o"])
    v_ll = float(operating_point["v_ll_rms"])
    if not (p_o > 0 and v_ll > 0):
        raise ValueError(f"AC operating point needs positive power and voltage: {operating_point}")
    r_load = v_ll**2 / p_o
    if "r_load" in operating_point and not math.isclose(operating_point["r_load"], r_load, rel_tol=1e-9):
        raise ValueError(f"inconsistent operating point: p_o != v^2/R in {operating_point}")

    base = params.base
    v_pk_base, _ = ac_peak_bases(base)
    w = params.omega_nom
    l_f, c_f = params.l_f, params.c_f

    v_d, v_q = v_ll * math.sqrt(2.0 / 3.0), 0.0
    i_od, i_oq = v_d / r_load, v_q / r_load
    i_d = i_od - w * c_f * v_q
    i_q = i_oq + w * c_f * v_d
    v_sw_d = v_d - w * l_f * i_q
    v_sw_q = v_q + w * l_f * i_d
    if math.hypot(v_sw_d, v_sw_q) > 0.5 * params.v_in:
        raise ValueError("operating point needs more switch voltage than the DC link provides")

    theta0 = 0.0
    states = np.array(
        inverse_park((i_d, i_q), theta0) + inverse_park((v_d, v_q), theta0)
        + inverse_park((v_sw_d, v_sw_q), theta0)
    )
    cc_gains = params.current_gains()
    vc_gains = params.voltage_gains()
    # feedforward and decoupling carry the steady state; only the d voltage PI holds load current
    cc = (DiscretePi(cc_gains, 0.0), DiscretePi(cc_gains, 0.0))
    vc = (DiscretePi(vc_gains, i_d + w * c_f * v_q), DiscretePi(vc_gains, i_q - w * c_f * v_d))
    p_pu = p_o / base.s_base
    return AcConverterModel(
        PlantParams(params.v_in, l_f, c_f, PlantKind.AC_DQ_AXIS),
        cc,
        vc,
        droop or params.ac_droop(),
        base,
        f_nom=params.f_nom,
        omega_set=1.0,
        p_set=p_pu,
        v_set=v_d / v_pk_base,
        r_load=r_load,
        states=states,
        theta=theta0,
        p_filt=p_pu,
        i_ref_dq=(i_d, i_q),
        pwm_tau=params.tau_pwm,
        t_sample=params.t_sample,
        voltage_loop=voltage_loop,
        droop_enabled=droop_enabled,
    )
