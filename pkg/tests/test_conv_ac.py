import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualgrid.conv_ac import (
    AC_SIGNALS,
    DroopState,
    ac_current_control,
    ac_droop_step,
    ac_voltage_control,
    build_ac_scenario,
    instantaneous_power,
    inverse_park,
    park_transform,
)
from dualgrid.params import ConverterParams
from dualgrid.simcore import DiscretePi, SimConfig, StepEvent, UnknownSignalError, run

P = ConverterParams()
OP = {"p_o": 2000.0, "v_ll_rms": 350.0}
DROOP = P.ac_droop()
W = P.omega_nom


def _triple(x, theta):
    return [x * math.cos(theta - k * 2 * math.pi / 3) for k in range(3)]


def test_park_aligned():
    d, q = park_transform(_triple(286.0, 0.7), 0.7)
    assert d == pytest.approx(286.0, rel=1e-12) and abs(q) < 1e-12


def test_park_quarter_shift():
    # -X sin(theta) per phase lands on +q
    x = [-100.0 * math.sin(0.3 - k * 2 * math.pi / 3) for k in range(3)]
    d, q = park_transform(x, 0.3)
    assert abs(d) < 1e-12 and q == pytest.approx(100.0, rel=1e-12)


angles = st.floats(min_value=-10.0, max_value=10.0)
amps = st.floats(min_value=-1e3, max_value=1e3)


@settings(max_examples=200, deadline=None)
@given(d=amps, q=amps, theta=angles)
def test_park_round_trip(d, q, theta):
    abc = inverse_park((d, q), theta)
    assert abs(sum(abc)) <= 1e-9 * (abs(d) + abs(q) + 1.0)
    d2, q2 = park_transform(abc, theta)
    assert d2 == pytest.approx(d, abs=1e-9 * (abs(d) + abs(q) + 1))
    assert q2 == pytest.approx(q, abs=1e-9 * (abs(d) + abs(q) + 1))


@settings(max_examples=200, deadline=None)
@given(vd=amps, vq=amps, i_d=amps, iq=amps, theta=angles)
def test_power_invariance(vd, vq, i_d, iq, theta):
    p_abc = instantaneous_power(inverse_park((vd, vq), theta), inverse_park((i_d, iq), theta))
    p_dq = 1.5 * (vd * i_d + vq * iq)
    assert p_abc == pytest.approx(p_dq, rel=1e-9, abs=1e-9 * (abs(vd) + abs(vq)) * (abs(i_d) + abs(iq)) + 1e-12)


def test_power_of_zero_voltage():
    assert instantaneous_power([0.0, 0.0, 0.0], [1.0, -0.5, -0.5]) == 0.0


@pytest.mark.parametrize("theta", [0.0, 0.4, 2.0, 5.5])
def test_balanced_resistive_power(theta):
    r = 350.0**2 / 2000.0
    assert r == pytest.approx(61.25)
    v = _triple(350.0 * math.sqrt(2 / 3), theta)
    assert instantaneous_power(v, [x / r for x in v]) == pytest.approx(2000.0, rel=1e-12)


def test_droop_at_setpoint():
    st_ = DroopState(p_filt=0.5)
    omega, dth = ac_droop_step(0.5, st_, DROOP, {"omega_set": 1.0, "p_set": 0.5}, 1e-5)
    assert omega == 1.0
    assert dth == pytest.approx(W * 1e-5, rel=1e-15)


def test_droop_initial_slope():
    dp, dt = 0.1, 1e-5
    st_ = DroopState(p_filt=0.5)
    omega, _ = ac_droop_step(0.5 + dp, st_, DROOP, {"omega_set": 1.0, "p_set": 0.5}, dt)
    assert (omega - 1.0) / dt == pytest.approx(-dp / (2 * DROOP.h), rel=1e-9)


def test_droop_statics():
    dp = 0.25
    st_ = DroopState(p_filt=0.5)
    for _ in range(20000):
        omega, _ = ac_droop_step(0.5 + dp, st_, DROOP, {"omega_set": 1.0, "p_set": 0.5}, 0.01)
    assert omega - 1.0 == pytest.approx(-DROOP.m_p * dp, abs=1e-9)
    assert omega - 1.0 == pytest.approx(-dp / DROOP.k_d_ac, abs=1e-9)


def test_droop_rejects_bad_dt():
    with pytest.raises(ValueError):
        ac_droop_step(0.5, DroopState(0.5), DROOP, {"omega_set": 1.0, "p_set": 0.5}, 0.0)


def _controllers():
    m = build_ac_scenario(OP)
    return m, m.dq_state()


def test_voltage_control_holds_equilibrium():
    m, s = _controllers()
    i_ref = ac_voltage_control((s["v_d"], s["v_q"]), s["v_d"], m.vc_d, m.vc_q, W, P.c_f, P.t_sample)
    assert i_ref == pytest.approx((s["i_d"], s["i_q"]), rel=1e-9, abs=1e-9)


def test_voltage_control_sign():
    m, s = _controllers()
    base = ac_voltage_control((s["v_d"], 0.0), s["v_d"], m.vc_d, m.vc_q, W, P.c_f, P.t_sample)
    m, s = _controllers()
    low = ac_voltage_control((s["v_d"] - 5.0, 0.0), s["v_d"], m.vc_d, m.vc_q, W, P.c_f, P.t_sample)
    assert low[0] > base[0]


def test_current_control_reproduces_equilibrium():
    m, s = _controllers()
    i_dq = (s["i_d"], s["i_q"])
    duty = ac_current_control(i_dq, i_dq, m.cc_d, m.cc_q, (s["v_d"], s["v_q"]), W, P.l_f, P.v_in, P.t_sample)
    v_sw_d = s["v_d"] - W * P.l_f * s["i_q"]
    v_sw_q = s["v_q"] + W * P.l_f * s["i_d"]
    assert duty == pytest.approx((v_sw_d / P.v_in, v_sw_q / P.v_in), rel=1e-9, abs=1e-12)


def test_mismatched_axis_gains_rejected():
    m, s = _controllers()
    other = DiscretePi(P.voltage_gains())
    with pytest.raises(ValueError):
        ac_current_control((0, 0), (0, 0), m.cc_d, other, (0, 0), W, P.l_f, P.v_in, P.t_sample)


def test_build_reference_point():
    m = build_ac_scenario(OP)
    assert m.r_load == pytest.approx(61.25, rel=1e-12)
    s = m.dq_state()
    assert s["v_d"] == pytest.approx(350 * math.sqrt(2 / 3), rel=1e-12)
    assert abs(s["v_q"]) < 1e-9
    assert m.theta == 0.0 and m.omega == 1.0


def test_build_rejects_inconsistent_point():
    with pytest.raises(ValueError):
        build_ac_scenario({"p_o": 2000.0, "v_ll_rms": 350.0, "r_load": 50.0})
    with pytest.raises(ValueError):
        build_ac_scenario({"p_o": 0.0, "v_ll_rms": 350.0})


def test_equilibrium_hold_short():
    m = build_ac_scenario(OP)
    tr = run(m, SimConfig(t_end=1.0))
    assert tr.names == AC_SIGNALS
    assert np.max(np.abs(tr["v_o_mag_pu"] - 1.0)) < 1e-5
    assert np.max(np.abs(tr["omega_pu"] - 1.0)) < 1e-6
    np.testing.assert_allclose(tr["p_o_W"], 2000.0, rtol=1e-5)


def test_three_wire_currents_sum_to_zero():
    m = build_ac_scenario(OP)
    m2 = m.copy()
    cfg = SimConfig(t_end=0.05)
    rec = np.empty((len(m2.signal_names), cfg.n_steps // cfg.record_decimation + 1))
    m2.set_input("r_load_ohm", 40.0)
    assert m2.advance(0, cfg.n_steps + 1, cfg, rec) == -1
    assert abs(m2.x[:3].sum()) <= 1e-9 * np.max(np.abs(m2.x[:3]))


def test_load_step_lowers_frequency():
    ev = [StepEvent(0.01, "r_load_ohm", 350.0**2 / 3000.0)]
    tr = run(build_ac_scenario(OP), SimConfig(t_end=0.3), ev)
    sl = tr.window(0.1, 0.3)
    assert np.all(np.diff(tr["omega_pu"][sl]) < 0)
    assert tr["p_o_W"][-1] == pytest.approx(3000.0, rel=2e-3)


def test_theta_advances_by_omega_each_sample():
    m = build_ac_scenario(OP, voltage_loop=False, droop_enabled=False)
    cfg = SimConfig(t_end=0.005, record_decimation=10)
    tr = run(m, cfg)
    inc = np.diff(np.unwrap(tr["theta_rad"]))
    np.testing.assert_allclose(inc, tr["omega_pu"][1:] * W * cfg.t_sample, rtol=0, atol=1e-12)
    assert np.all((tr["theta_rad"] >= 0) & (tr["theta_rad"] < 2 * math.pi))


def test_unknown_input():
    with pytest.raises(UnknownSignalError):
        build_ac_scenario(OP).set_input("i_o_A", 1.0)
    with pytest.raises(ValueError):
        build_ac_scenario(OP).set_input("r_load_ohm", 0.0)
