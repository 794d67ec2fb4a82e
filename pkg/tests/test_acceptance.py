"""Acceptance criteria 1-9, one test each; every test prints a single PASS/FAIL line.

Run alone with ``python -m pytest tests/test_acceptance.py -s`` (or execute this file).
The disturbance and current-step simulations are shared session fixtures.
"""

import math
import sys

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from dualgrid import pu_base_new
from dualgrid.core import tf_eval
from dualgrid.params import ConverterParams
from dualgrid.plant import (
    PlantKind,
    PlantParams,
    PwmDelay,
    current_loop_gain,
    derive_plant,
    simplified_current_loop,
)
from dualgrid.scenario import (
    ScenarioConfig,
    builtin_config,
    disturbance_checks,
    run_builtin,
    run_config,
)
from dualgrid.simcore import SimConfig
from dualgrid.tuning import duality_map

P = ConverterParams()


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_inertia_from_dc_capacitance():
    h = duality_map(72e-3, 0.75, pu_base_new(4000.0, 350.0)).h
    rel = abs(h - 1.1025) / 1.1025
    record(1, "H from C_dc = 72 mF", rel <= 1e-12, f"H = {h!r} s, rel err {rel:.1e} (tol 1e-12)")


def test_criterion_2_current_loop_gains_identical():
    r_i = P.current_gains().tf()
    pwm = PwmDelay(P.tau_pwm, P.v_in)
    t_ac = current_loop_gain(derive_plant(PlantParams(P.v_in, P.l_f, P.c_f, PlantKind.AC_DQ_AXIS)), pwm, r_i)
    t_dc = current_loop_gain(derive_plant(PlantParams(P.v_in, P.l_f, P.c_dc, PlantKind.DC)), pwm, r_i)
    same = t_ac.num == t_dc.num and t_ac.den == t_dc.den
    worst = max(
        abs(abs(tf_eval(t_ac, w)) - abs(tf_eval(t_dc, w))) / abs(tf_eval(t_dc, w)) for w in np.logspace(0, 5, 50)
    )
    record(
        2, "AC vs DC current loop gain", same and worst <= 1e-12,
        f"coefficient-identical={same}, max rel |T| diff {worst:.1e} over 50 points (tol 1e-12)",
    )


def test_criterion_3_crossover_magnitude():
    mag = abs(tf_eval(simplified_current_loop(P.l_f, P.current_gains().tf()), P.omega_current))
    expected = math.sqrt(1 + 1 / P.c_i**2)
    ok = abs(mag - expected) <= 1e-9 and round(mag, 6) == 1.001249
    record(3, "|T_i(j omega_bi)| simplified", ok, f"{mag:.10f} vs {expected:.10f} (tol 1e-9)")


def test_criterion_4_current_step_overlay(cc_step_result):
    rep = cc_step_result.reports[0]
    rises = {c.name.split()[0]: c for c in cc_step_result.checks}
    expected = 2.2 / P.omega_current
    ok = rep.passed and all(c.passed for c in rises.values())
    record(
        4, "current step overlay", ok,
        f"max|d| = {rep.max_abs_dev:.2e} p.u. (tol {rep.tolerance_used:.1e}); rise ac {rises['ac'].value * 1e3:.3f} ms, "
        f"dc {rises['dc'].value * 1e3:.3f} ms (target {expected * 1e3:.3f} ms +-30%)",
    )


def _disturbance_summary(result):
    rep = result.reports[0]
    statics = [c for c in result.checks if "steady-state" in c.name]
    ok = rep.passed and all(c.passed for c in statics)
    detail = f"rms {rep.rms_dev:.2e} (tol {rep.tolerance_used:.2e}); settle " + ", ".join(
        f"{c.name.split()[0]} {c.value:.5f}" for c in statics
    )
    return ok, detail


def test_criterion_5_disturbance_overlay(disturbance_result):
    ok, detail = _disturbance_summary(disturbance_result)
    fine = run_builtin("disturbance", dt=5e-6, plot=False)
    ok5, detail5 = _disturbance_summary(fine)
    record(5, "disturbance overlay and settling", ok and ok5, f"1 us: {detail}; 5 us: {detail5} (tol 1e-3)")


def test_criterion_6_reduced_order_oracle(disturbance_result):
    checks = [c for c in disturbance_result.checks if "reduced" in c.name]
    ok = len(checks) == 2 and all(c.passed for c in checks)
    record(
        6, "full model vs closed-form droop response", ok,
        ", ".join(f"{c.name.split()[0]} {c.value:.2e}" for c in checks) + " p.u. after 50 ms (tol 5e-3)",
    )


def test_criterion_7_droop_statics(disturbance_result):
    parts, ok = [], True
    for mag in (0.05, 0.1, 0.25):
        if mag == 0.25:
            traces = disturbance_result.traces
        else:
            traces = run_config(builtin_config("disturbance", magnitude=mag))
        _, checks = disturbance_checks(traces, P, delta=mag)
        statics = [c for c in checks if "steady-state" in c.name]
        ok &= all(c.passed for c in statics)
        expected = -mag / P.k_d_dc
        parts.append(f"{mag}: " + "/".join(f"{c.value - expected:+.1e}" for c in statics))
    record(7, "droop statics ac/dc error vs -d/K_d", ok, "; ".join(parts) + " (tol 1e-3)")


def test_criterion_8_terminal_voltage_dip(disturbance_result):
    checks = [c for c in disturbance_result.checks if "|v_o|" in c.name]
    ok = len(checks) == 2 and all(c.passed for c in checks)
    record(8, "AC |v_o| dips then recovers", ok, f"min {checks[0].value:.5f}, final {checks[1].value:.7f} (tol 1e-3)")


def test_criterion_9_determinism_and_equilibrium():
    short = builtin_config("disturbance", t_end=2.5)
    a, b = run_config(short), run_config(short)
    identical = all(a[k].to_csv() == b[k].to_csv() for k in ("ac", "dc"))
    base = builtin_config("disturbance")
    idle = ScenarioConfig(
        converter="both", p_o=base.p_o, v_o=base.v_o, params=base.params,
        sim=SimConfig(t_end=10.0, record_decimation=100),
    )
    tr = run_config(idle)
    drift = max(
        float(np.max(np.abs(tr["dc"]["v_o_pu"] - 1.0))),
        float(np.max(np.abs(tr["ac"]["v_o_mag_pu"] - 1.0))),
        float(np.max(np.abs(tr["ac"]["omega_pu"] - 1.0))),
    )
    record(
        9, "determinism and 10 s equilibrium", identical and drift < 1e-4,
        f"bitwise identical={identical}, max drift {drift:.1e} p.u. (tol 1e-4)",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
