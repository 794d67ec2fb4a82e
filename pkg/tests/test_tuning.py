import math

import pytest

from dualgrid import pu_base_new
from dualgrid.params import ConverterParams
from dualgrid.tuning import (
    AcDroopParams,
    current_bandwidth,
    droop_from_swing,
    duality_map,
    swing_from_droop,
    timescale_check,
    tune_current_controller,
    tune_voltage_controller,
)

BASE = pu_base_new(4000.0, 350.0)


def test_current_controller_reference():
    w = current_bandwidth(50e3)
    assert w == pytest.approx(3141.593, abs=1e-3)
    g = tune_current_controller(7.7e-3, w, 20.0)
    assert g.k_p == pytest.approx(24.190, abs=5e-4)
    assert g.t_i == pytest.approx(6.3662e-3, abs=5e-8)


def test_current_controller_unit():
    g = tune_current_controller(1.0, 1.0, 1.0)
    assert (g.k_p, g.t_i) == (1.0, 1.0)


def test_ac_and_dc_current_gains_bitwise_equal():
    p = ConverterParams()
    a = tune_current_controller(p.l_f, p.omega_current, p.c_i)
    b = tune_current_controller(p.l_f, p.omega_current, p.c_i)
    assert a == b


def test_voltage_controller_reference():
    g = tune_voltage_controller(0.72e-3, 628.319, 2.5)
    assert g.k_p == pytest.approx(0.45239, abs=5e-6)
    assert g.t_i == pytest.approx(3.9789e-3, abs=5e-8)


def test_voltage_controller_unit_and_linearity():
    assert tune_voltage_controller(1.0, 1.0, 1.0).k_p == 1.0
    full = tune_voltage_controller(0.72e-3, 628.319, 2.5)
    half = tune_voltage_controller(0.36e-3, 628.319, 2.5)
    assert half.k_p == pytest.approx(full.k_p / 2, rel=1e-15)
    assert half.t_i == full.t_i


@pytest.mark.parametrize("fn", [tune_current_controller, tune_voltage_controller])
def test_tuning_rejects_non_positive(fn):
    with pytest.raises(ValueError):
        fn(0.0, 1.0, 1.0)


def test_pi_without_integrator():
    from dualgrid.tuning import PiGains

    g = PiGains(2.0, math.inf)
    assert g.k_i == 0.0


def test_swing_from_droop_reference():
    h, k_d = swing_from_droop(1 / 0.75, 1 / (2 * 1.1025 / 0.75))
    assert h == pytest.approx(1.1025, rel=1e-12)
    assert k_d == pytest.approx(0.75, rel=1e-12)
    h, k_d = swing_from_droop(1.33333, 0.340136)
    assert h == pytest.approx(1.1025, rel=1e-5) and k_d == pytest.approx(0.75, rel=1e-5)


def test_swing_from_droop_unit():
    assert swing_from_droop(1.0, 0.5) == (1.0, 1.0)


@pytest.mark.parametrize("m_p,w_c", [(1.33333, 0.340136), (0.05, 31.4), (2.0, 1e-3)])
def test_droop_swing_round_trip(m_p, w_c):
    m2, w2 = droop_from_swing(*swing_from_droop(m_p, w_c))
    assert m2 == pytest.approx(m_p, rel=1e-12) and w2 == pytest.approx(w_c, rel=1e-12)


def test_duality_map_reference():
    ac = duality_map(72e-3, 0.75, BASE)
    assert ac.h == pytest.approx(1.1025, rel=1e-12)
    assert ac.omega_c == pytest.approx(0.340136, abs=5e-7)
    assert swing_from_droop(ac.m_p, ac.omega_c) == pytest.approx((ac.h, ac.k_d_ac), rel=1e-12)


def test_duality_map_unit_base():
    ac = duality_map(2.0, 1.0, pu_base_new(1.0, 1.0))
    assert (ac.h, ac.m_p, ac.omega_c) == (1.0, 1.0, 0.5)


def test_duality_map_monotone():
    hs = [duality_map(c, 0.75, BASE) for c in (10e-3, 50e-3, 72e-3, 0.2)]
    assert all(a.h < b.h for a, b in zip(hs, hs[1:]))
    assert all(a.omega_c > b.omega_c for a, b in zip(hs, hs[1:]))


def test_inconsistent_ac_droop_rejected():
    with pytest.raises(ValueError):
        AcDroopParams(m_p=1.0, omega_c=0.5, h=2.0, k_d_ac=1.0)


def test_timescale_check():
    r = timescale_check(0.340136, 628.319, 100)
    assert r.ok and r.ratio == pytest.approx(1847, abs=1)
    assert not timescale_check(1.0, 10.0, 100).ok
    assert timescale_check(1.0, 100.0, 100).ok
    assert "1847" in str(r)
