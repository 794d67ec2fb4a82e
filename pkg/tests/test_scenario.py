import json

import pytest

from dualgrid.params import ConverterParams
from dualgrid.scenario import (
    CONFIG_SCHEMA,
    ConfigError,
    builtin_config,
    load_config,
    parse_config,
    run_builtin,
    run_config,
)

BASE_DOC = {
    "converter": "both",
    "operating_point": {"p_o_W": 2000.0, "v_o_V": 350.0},
    "components": {"v_in": 700.0, "l_f": 7.7e-3, "c_f": 0.72e-3, "c_dc": 72e-3},
    "events": [
        {"t": 0.01, "target": "r_load_ohm", "new_value": 40.8333, "converter": "ac"},
        {"t": 0.01, "target": "i_o_A", "new_value": 8.5714, "converter": "dc"},
    ],
    "sim": {"t_end": 0.02},
    "outputs": {"signals": ["omega_pu", "v_o_pu"]},
}


def _doc(**changes):
    doc = json.loads(json.dumps(BASE_DOC))
    for path, value in changes.items():
        node = doc
        *parents, leaf = path.split("__")
        for p in parents:
            node = node[p]
        if value is None:
            del node[leaf]
        else:
            node[leaf] = value
    return doc


def test_defaults_applied():
    cfg = parse_config(_doc())
    assert cfg.params == ConverterParams()
    assert cfg.sim.dt == 1e-6 and cfg.sim.record_decimation == 100
    assert [c for c, _ in cfg.events] == ["ac", "dc"]


def test_config_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(_doc()))
    cfg = load_config(path)
    again = parse_config(json.loads(cfg.dumps()))
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_published_schema_matches(tmp_path):
    from pathlib import Path

    shipped = Path(__file__).resolve().parents[1] / "docs" / "config.schema.json"
    assert json.loads(shipped.read_text()) == CONFIG_SCHEMA


def test_missing_input_voltage_named():
    with pytest.raises(ConfigError, match="v_in"):
        parse_config(_doc(components__v_in=None))


def test_duplicate_output_signal():
    with pytest.raises(ConfigError, match="outputs.signals"):
        parse_config(_doc(outputs__signals=["omega_pu", "omega_pu"]))


def test_unknown_output_signal():
    with pytest.raises(ConfigError, match="unknown signal"):
        parse_config(_doc(outputs__signals=["speed"]))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="colour"):
        parse_config(_doc(colour="red"))


def test_negative_value_named():
    with pytest.raises(ConfigError, match="l_f"):
        parse_config(_doc(components__l_f=-1.0))


def test_parse_error_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "converter": "dc",\n  oops\n}')
    with pytest.raises(ConfigError, match="line 3, column 3"):
        load_config(path)


def test_inconsistent_load_resistance():
    with pytest.raises(ConfigError, match="physical inconsistency"):
        parse_config(_doc(operating_point__r_load_ohm=50.0))
    cfg = parse_config(_doc(operating_point__r_load_ohm=61.25))
    assert cfg.r_load == 61.25


def test_independent_ac_droop_only_for_ac():
    droop = {"m_p": 0.05, "omega_c": 31.4}
    with pytest.raises(ConfigError, match="derived"):
        parse_config(_doc(droop_ac=droop))
    doc = _doc(converter="ac", droop_ac=droop, outputs__signals=["omega_pu"])
    doc["events"] = doc["events"][:1]
    assert parse_config(doc).droop_ac == (0.05, 31.4)


def test_event_checks():
    with pytest.raises(ConfigError, match="beyond"):
        parse_config(_doc(sim__t_end=0.005))
    doc = _doc()
    doc["events"][0]["target"] = "i_o_A"
    with pytest.raises(ConfigError, match="not steppable"):
        parse_config(doc)
    doc = _doc()
    del doc["events"][0]["converter"]
    with pytest.raises(ConfigError, match="converter"):
        parse_config(doc)


def test_sampling_must_divide():
    with pytest.raises(ConfigError, match="multiple"):
        parse_config(_doc(sim__dt=3e-6))


def test_run_config_both():
    traces = run_config(parse_config(_doc()))
    assert set(traces) == {"ac", "dc"}
    assert traces["ac"]["omega_pu"][-1] < 1.0
    assert traces["dc"]["v_o_pu"][-1] < 1.0


def test_builtin_disturbance_config():
    cfg = builtin_config("disturbance")
    p = ConverterParams()
    assert cfg.sim.t_end == 20.0 and cfg.converter == "both"
    assert {ev.t for _, ev in cfg.events} == {2.0}
    ev = dict(cfg.events)
    assert ev["ac"].new_value == pytest.approx(350.0**2 / 3000.0)
    assert ev["ac"].new_value == pytest.approx(40.833, abs=5e-4)
    assert ev["dc"].new_value - 2000 / 350 == pytest.approx(0.25 * p.base.i_base)
    assert ev["dc"].new_value - 2000 / 350 == pytest.approx(2.857, abs=5e-4)


def test_builtin_timestep_keeps_trace_resolution():
    assert builtin_config("disturbance", dt=5e-6).sim.dt_record == pytest.approx(1e-4)
    assert builtin_config("cc_step", dt=2e-6).sim.dt_record == pytest.approx(1e-5)


def test_builtin_rejects_short_horizon():
    with pytest.raises(ConfigError):
        builtin_config("disturbance", t_end=1.0)
    with pytest.raises(ConfigError):
        run_builtin("bogus")


def test_bode_builtin(tmp_path):
    res = run_builtin("bode", tmp_path)
    assert res.passed
    assert (tmp_path / "bode_Ti_ac.csv").read_bytes() != (tmp_path / "bode_Ti_ac_delayed_ff.csv").read_bytes()
    ac = (tmp_path / "bode_Ti_ac.csv").read_text().splitlines()
    dc = (tmp_path / "bode_Ti_dc.csv").read_text().splitlines()
    assert ac == dc


def test_cc_step_builtin(cc_step_result):
    assert cc_step_result.passed, cc_step_result.summary()
    rep = cc_step_result.reports[0]
    assert rep.max_abs_dev <= 0.01 * 0.1


def test_builtin_outputs_byte_identical(tmp_path):
    a = run_builtin("cc_step", tmp_path / "a", t_end=2.01)
    b = run_builtin("cc_step", tmp_path / "b", t_end=2.01)
    names = sorted(p.name for p in a.files)
    assert names == sorted(p.name for p in b.files)
    assert {"cc_step.svg", "cc_step_ac.csv", "cc_step_dc.csv", "cc_step_reports.csv"} <= set(names)
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
