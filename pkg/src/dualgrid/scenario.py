"""Scenario configuration, the built-in reference experiments and their checks."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from dualgrid.conv_ac import AC_SIGNALS, AcConverterModel, build_ac_scenario
from dualgrid.conv_dc import DC_SIGNALS, DcConverterModel, build_dc_scenario
from dualgrid.core import bode_grid, write_frequency_response_csv
from dualgrid.oracle import ReducedModel
from dualgrid.params import ConverterParams, ac_peak_bases
from dualgrid.plant import (
    PlantKind,
    PlantParams,
    PwmDelay,
    current_loop_gain,
    derive_plant,
    simplified_current_loop,
    simplified_voltage_loop,
)
from dualgrid.plot import emit_plot
from dualgrid.simcore import SimConfig, SimTrace, StepEvent, run
from dualgrid.tuning import AcDroopParams
from dualgrid.verify import (
    ComparisonReport,
    NotSettledError,
    align_and_compare,
    check_statics,
    deviation,
    oracle_deviation,
    reports_to_csv,
    rise_time,
)

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "Check",
    "BuiltinResult",
    "CONFIG_SCHEMA",
    "BUILTIN_NAMES",
    "load_config",
    "parse_config",
    "builtin_config",
    "run_config",
    "run_builtin",
    "cc_step_checks",
    "disturbance_checks",
]

BUILTIN_NAMES = ("cc_step", "disturbance", "voltage_dip", "bode")
EVENT_TIME = 2.0
CC_STEP = (0.5, 0.6)
DISTURBANCE_PU = 0.25


class ConfigError(ValueError):
    pass


_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dualgrid scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["converter", "operating_point", "components", "sim"],
    "properties": {
        "converter": {"enum": ["ac", "dc", "both"]},
        "operating_point": {
            "type": "object",
            "additionalProperties": False,
            "required": ["p_o_W", "v_o_V"],
            "properties": {
                "p_o_W": {"type": "number", "minimum": 0},
                "v_o_V": _POS,
                "r_load_ohm": _POS,
            },
        },
        "components": {
            "type": "object",
            "additionalProperties": False,
            "required": ["v_in", "l_f", "c_dc"],
            "properties": {"v_in": _POS, "l_f": _POS, "c_f": _POS, "c_dc": _POS},
        },
        "base": {
            "type": "object",
            "additionalProperties": False,
            "required": ["s_base_W", "v_base_V"],
            "properties": {"s_base_W": _POS, "v_base_V": _POS},
        },
        "f_nom_Hz": _POS,
        "tuning": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f_s_Hz": _POS,
                "omega_bi": _POS,
                "c_i": _POS,
                "omega_bv": _POS,
                "bv_ratio": _POS,
                "c_v": _POS,
                "k_d_dc": _POS,
                "pwm_tau": _POS,
            },
        },
        "droop_ac": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m_p", "omega_c"],
            "properties": {"m_p": _POS, "omega_c": _POS},
        },
        "cc_only": {"type": "boolean"},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["t", "target", "new_value"],
                "properties": {
                    "t": {"type": "number", "minimum": 0},
                    "target": {"type": "string"},
                    "new_value": {"type": "number"},
                    "converter": {"enum": ["ac", "dc"]},
                },
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_end"],
            "properties": {
                "t_end": _POS,
                "dt": _POS,
                "t_sample": _POS,
                "record_decimation": {"type": "integer", "minimum": 1},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv_dir": {"type": ["string", "null"]},
                "plot": {"type": "boolean"},
                "signals": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
            },
        },
    },
}

_PARAM_KEYS = {
    # config path -> ConverterParams field
    ("components", "v_in"): "v_in",
    ("components", "l_f"): "l_f",
    ("components", "c_f"): "c_f",
    ("components", "c_dc"): "c_dc",
    ("base", "s_base_W"): "s_base",
    ("base", "v_base_V"): "v_base",
    ("tuning", "f_s_Hz"): "f_s",
    ("tuning", "omega_bi"): "omega_bi",
    ("tuning", "c_i"): "c_i",
    ("tuning", "omega_bv"): "omega_bv",
    ("tuning", "bv_ratio"): "bv_ratio",
    ("tuning", "c_v"): "c_v",
    ("tuning", "k_d_dc"): "k_d_dc",
    ("tuning", "pwm_tau"): "pwm_tau",
}


@dataclass(frozen=True)
class ScenarioConfig:
    converter: str
    p_o: float
    v_o: float
    params: ConverterParams
    sim: SimConfig
    events: tuple[tuple[str, StepEvent], ...] = ()
    r_load: float | None = None
    droop_ac: tuple[float, float] | None = None
    cc_only: bool = False
    csv_dir: str | None = None
    plot: bool = False
    signals: tuple[str, ...] | None = None

    @property
    def converters(self) -> tuple[str, ...]:
        return ("ac", "dc") if self.converter == "both" else (self.converter,)

    def to_dict(self) -> dict:
        p = self.params
        d: dict = {
            "converter": self.converter,
            "operating_point": {"p_o_W": self.p_o, "v_o_V": self.v_o},
            "components": {"v_in": p.v_in, "l_f": p.l_f, "c_f": p.c_f, "c_dc": p.c_dc},
            "base": {"s_base_W": p.s_base, "v_base_V": p.v_base},
            "f_nom_Hz": p.f_nom,
            "tuning": {"f_s_Hz": p.f_s, "c_i": p.c_i, "bv_ratio": p.bv_ratio, "c_v": p.c_v, "k_d_dc": p.k_d_dc},
            "cc_only": self.cc_only,
            "events": [
                {"t": ev.t, "target": ev.target, "new_value": ev.new_value, "converter": conv}
                for conv, ev in self.events
            ],
            "sim": {
                "t_end": self.sim.t_end,
                "dt": self.sim.dt,
                "t_sample": self.sim.t_sample,
                "record_decimation": self.sim.record_decimation,
            },
            "outputs": {"csv_dir": self.csv_dir, "plot": self.plot},
        }
        for key in ("omega_bi", "omega_bv", "pwm_tau"):
            if getattr(p, key) is not None:
                d["tuning"][key] = getattr(p, key)
        if self.r_load is not None:
            d["operating_point"]["r_load_ohm"] = self.r_load
        if self.droop_ac is not None:
            d["droop_ac"] = {"m_p": self.droop_ac[0], "omega_c": self.droop_ac[1]}
        if self.signals is not None:
            d["outputs"]["signals"] = list(self.signals)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a decoded JSON document and apply defaults."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        msgs = "; ".join(f"{_field_path(e)}: {e.message}" for e in errors)
        raise ConfigError(f"schema violation: {msgs}")

    converter = doc["converter"]
    if converter != "dc" and "c_f" not in doc["components"]:
        raise ConfigError("schema violation: components: 'c_f' is required for AC converters")
    if "droop_ac" in doc and converter != "ac":
        raise ConfigError(
            "droop_ac is only accepted for converter 'ac'; with 'both' the AC droop is derived from the DC side"
        )

    kw = {}
    for (section, key), name in _PARAM_KEYS.items():
        if key in doc.get(section, {}):
            kw[name] = float(doc[section][key])
    if "f_nom_Hz" in doc:
        kw["f_nom"] = float(doc["f_nom_Hz"])
    sim_doc = doc["sim"]
    if "t_sample" in sim_doc:
        kw["t_sample"] = float(sim_doc["t_sample"])
    try:
        params = ConverterParams(**kw)
        sim = SimConfig(
            t_end=float(sim_doc["t_end"]),
            dt=float(sim_doc.get("dt", 1e-6)),
            t_sample=params.t_sample,
            record_decimation=int(sim_doc.get("record_decimation", 100)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    op = doc["operating_point"]
    p_o, v_o = float(op["p_o_W"]), float(op["v_o_V"])
    r_load = float(op["r_load_ohm"]) if "r_load_ohm" in op else None
    if r_load is not None and not math.isclose(p_o, v_o**2 / r_load, rel_tol=1e-6):
        raise ConfigError(f"physical inconsistency: p_o_W={p_o} but v_o_V^2/r_load_ohm={v_o**2 / r_load}")
    if v_o > params.v_in:
        raise ConfigError(f"physical inconsistency: v_o_V={v_o} exceeds v_in={params.v_in}")
    if converter != "dc" and p_o <= 0:
        raise ConfigError("physical inconsistency: the AC resistive load needs p_o_W > 0")

    steppable = {"ac": AcConverterModel.steppable, "dc": DcConverterModel.steppable}
    converters = ("ac", "dc") if converter == "both" else (converter,)
    events = []
    for i, ev in enumerate(doc.get("events", [])):
        conv = ev.get("converter")
        if conv is None:
            if converter == "both":
                raise ConfigError(f"events.{i}.converter: required when converter is 'both'")
            conv = converter
        if conv not in converters:
            raise ConfigError(f"events.{i}.converter: {conv!r} is not simulated in this scenario")
        if ev["target"] not in steppable[conv]:
            raise ConfigError(f"events.{i}.target: {ev['target']!r} is not steppable on {conv}: {steppable[conv]}")
        if ev["t"] > sim.t_end:
            raise ConfigError(f"events.{i}.t: {ev['t']} lies beyond t_end={sim.t_end}")
        events.append((conv, StepEvent(float(ev["t"]), ev["target"], float(ev["new_value"]))))
    events.sort(key=lambda ce: (ce[1].t, ce[0]))

    outputs = doc.get("outputs", {})
    signals = outputs.get("signals")
    if signals is not None:
        known = set()
        for conv in converters:
            known.update(AC_SIGNALS if conv == "ac" else DC_SIGNALS)
        unknown = [s for s in signals if s not in known]
        if unknown:
            raise ConfigError(f"outputs.signals: unknown signal names {unknown}")
        signals = tuple(signals)

    droop = doc.get("droop_ac")
    return ScenarioConfig(
        converter=converter,
        p_o=p_o,
        v_o=v_o,
        params=params,
        sim=sim,
        events=tuple(events),
        r_load=r_load,
        droop_ac=(float(droop["m_p"]), float(droop["omega_c"])) if droop else None,
        cc_only=bool(doc.get("cc_only", False)),
        csv_dir=outputs.get("csv_dir"),
        plot=bool(outputs.get("plot", False)),
        signals=signals,
    )


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def build_models(cfg: ScenarioConfig) -> dict:
    models = {}
    if "dc" in cfg.converters:
        models["dc"] = build_dc_scenario(
            {"p_o": cfg.p_o, "v_o": cfg.v_o}, params=cfg.params, droop_enabled=not cfg.cc_only
        )
    if "ac" in cfg.converters:
        droop = AcDroopParams.from_droop(*cfg.droop_ac) if cfg.droop_ac else None
        models["ac"] = build_ac_scenario(
            {"p_o": cfg.p_o, "v_ll_rms": cfg.v_o},
            params=cfg.params,
            droop=droop,
            voltage_loop=not cfg.cc_only,
            droop_enabled=not cfg.cc_only,
        )
    return models


def run_config(cfg: ScenarioConfig, parallel: bool = True) -> dict[str, SimTrace]:
    """Simulate every converter of the scenario; independent runs may use threads."""
    models = build_models(cfg)

    def one(conv):
        evs = [ev for c, ev in cfg.events if c == conv]
        return conv, run(models[conv], cfg.sim, evs)

    if parallel and len(models) > 1:
        with ThreadPoolExecutor(max_workers=len(models)) as pool:
            return dict(pool.map(one, sorted(models)))
    return dict(one(c) for c in sorted(models))


def write_traces(cfg: ScenarioConfig, traces: dict[str, SimTrace], out_dir: Path, stem: str = "trace") -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for conv in sorted(traces):
        tr = traces[conv]
        if cfg.signals is not None:
            tr = tr.select([s for s in cfg.signals if s in tr])
        path = out_dir / f"{stem}_{conv}.csv"
        tr.to_csv(path)
        written.append(path)
    return written


# --------------------------------------------------------------------------- builtins


def builtin_config(
    name: str, *, dt: float | None = None, t_end: float | None = None, magnitude: float = DISTURBANCE_PU
) -> ScenarioConfig:
    """Reference scenario; ``dt`` changes the RK4 step but keeps the trace resolution.

    ``magnitude`` is the dual disturbance in p.u. for the disturbance and voltage_dip runs.
    """
    if name not in BUILTIN_NAMES or name == "bode":
        raise ConfigError(f"no simulation config for built-in {name!r}")
    params = ConverterParams()
    base = params.base
    p_o, v_o = 2000.0, 350.0
    if name == "cc_step":
        horizon, dt_record = 2.05, 1e-5
        events = (
            ("ac", StepEvent(EVENT_TIME, "i_f_d_set_pu", CC_STEP[1])),
            ("dc", StepEvent(EVENT_TIME, "i_f_set_pu", CC_STEP[1])),
        )
        converter, cc_only = "both", True
    else:
        horizon, dt_record = 20.0, 1e-4
        r_new = v_o**2 / (p_o + magnitude * base.s_base)
        i_new = p_o / v_o + magnitude * base.i_base
        events = (("ac", StepEvent(EVENT_TIME, "r_load_ohm", r_new)),)
        if name == "disturbance":
            events += (("dc", StepEvent(EVENT_TIME, "i_o_A", i_new)),)
            converter = "both"
        else:
            converter = "ac"
        cc_only = False
    step = dt if dt is not None else 1e-6
    dec = round(dt_record / step)
    if dec < 1 or not math.isclose(dec * step, dt_record, rel_tol=1e-9):
        dec = max(1, dec)
    horizon = t_end if t_end is not None else horizon
    if horizon <= EVENT_TIME:
        raise ConfigError(f"t_end={horizon} must exceed the event time {EVENT_TIME} s")
    try:
        sim = SimConfig(t_end=horizon, dt=step, t_sample=params.t_sample, record_decimation=dec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ScenarioConfig(
        converter=converter, p_o=p_o, v_o=v_o, params=params, sim=sim,
        events=events, cc_only=cc_only, plot=True,
    )


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_text(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: {self.value:.6g} (tol {self.tolerance:.3g}) {self.detail}".rstrip()


@dataclass
class BuiltinResult:
    name: str
    traces: dict[str, SimTrace] = field(default_factory=dict)
    reports: list[ComparisonReport] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    svgs: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports) and all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"== {self.name} =="]
        lines += [r.to_text() for r in self.reports]
        lines += [c.to_text() for c in self.checks]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _pu_current_trace(traces: dict[str, SimTrace], params: ConverterParams) -> dict[str, SimTrace]:
    base = params.base
    _, i_pk = ac_peak_bases(base)
    ac, dc = traces["ac"], traces["dc"]
    return {
        "ac": SimTrace(ac.t0, ac.dt_record, {"i_f_d_pu": ac["i_f_d_A"] / i_pk}),
        "dc": SimTrace(dc.t0, dc.dt_record, {"i_f_pu": dc["i_f_A"] / base.i_base}),
    }


def cc_step_checks(traces: dict[str, SimTrace], params: ConverterParams) -> tuple[list[ComparisonReport], list[Check]]:
    step = CC_STEP[1] - CC_STEP[0]
    pu = _pu_current_trace(traces, params)
    t_end = min(EVENT_TIME + 0.05, pu["ac"].t[-1])
    report = align_and_compare(
        pu["ac"], "i_f_d_pu", pu["dc"], "i_f_pu", (EVENT_TIME, t_end), 0.01 * step, metric="max_abs"
    )
    expected = 2.2 / params.omega_current
    checks = []
    for conv, sig in (("ac", "i_f_d_pu"), ("dc", "i_f_pu")):
        tr = pu[conv]
        sl = tr.window(EVENT_TIME, t_end)
        try:
            tr_rise = rise_time(tr.t[sl], tr[sig][sl])
        except ValueError:
            tr_rise = math.nan
        checks.append(
            Check(
                f"{conv} 10-90% current rise time (s)",
                tr_rise,
                0.3 * expected,
                bool(abs(tr_rise - expected) <= 0.3 * expected),
                f"expected {expected:.4g} s",
            )
        )
    return [report], checks


def disturbance_checks(
    traces: dict[str, SimTrace], params: ConverterParams, delta: float = DISTURBANCE_PU
) -> tuple[list[ComparisonReport], list[Check]]:
    ac, dc = traces["ac"], traces["dc"]
    k_d = params.k_d_dc
    expected = -delta / k_d
    t_end = min(ac.t[-1], dc.t[-1])
    report = align_and_compare(
        ac, "omega_pu", dc, "v_o_pu", (EVENT_TIME, t_end), 0.05 * abs(expected), metric="rms"
    )
    checks = []
    for conv, tr, sig in (("ac", ac, "omega_pu"), ("dc", dc, "v_o_pu")):
        checks.append(statics_check(f"{conv} steady-state deviation of {sig} (p.u.)", tr, sig, expected, 1e-3))
    ac_model = ReducedModel.from_ac(params.ac_droop())
    dc_model = ReducedModel.from_dc(params.dc_droop())
    for conv, tr, sig, model in (("ac", ac, "omega_pu", ac_model), ("dc", dc, "v_o_pu", dc_model)):
        dev = oracle_deviation(tr, sig, model, delta, EVENT_TIME, skip=0.05)
        checks.append(Check(f"{conv} max |full - reduced| after 50 ms (p.u.)", dev, 5e-3, dev < 5e-3))
    return [report], checks


def statics_check(name: str, trace: SimTrace, sig: str, expected: float, tol: float) -> Check:
    final = float(np.mean(deviation(trace, sig, EVENT_TIME)[trace.window(trace.t[-1] - 0.1, trace.t[-1])]))
    try:
        ok = check_statics(trace, sig, expected, tol, t_event=EVENT_TIME)
        detail = f"expected {expected:.4f}"
    except NotSettledError as exc:
        ok, detail = False, str(exc)
    return Check(name, final, tol, ok, detail)


def voltage_dip_checks(trace: SimTrace) -> list[Check]:
    v = trace["v_o_mag_pu"]
    i0 = trace.index_at(EVENT_TIME)
    dip = float(np.min(v[i0 : i0 + trace.index_at(EVENT_TIME + 0.05) - i0]))
    final = float(v[-1])
    return [
        Check("ac |v_o| minimum within 50 ms after the load step (p.u.)", dip, 1.0, dip < 1.0, "must dip below 1"),
        Check("ac |v_o| at end of run (p.u.)", final, 1e-3, abs(final - 1.0) <= 1e-3, "restored to 1 p.u."),
    ]


def bode_data(params: ConverterParams | None = None, omega_min=1.0, omega_max=1e5, ppd: int = 10) -> dict:
    """Frequency responses of the current and voltage loop gains for both converters."""
    params = params or ConverterParams()
    r_i = params.current_gains().tf()
    r_v = params.voltage_gains().tf()
    plants = {
        "ac": derive_plant(PlantParams(params.v_in, params.l_f, params.c_f, PlantKind.AC_DQ_AXIS)),
        "dc": derive_plant(PlantParams(params.v_in, params.l_f, params.c_dc, PlantKind.DC)),
    }
    pwm = PwmDelay(params.tau_pwm, params.v_in)
    tfs = {}
    for conv, plant in plants.items():
        tfs[f"Ti_{conv}"] = current_loop_gain(plant, pwm, r_i, "ideal")
        tfs[f"Ti_{conv}_delayed_ff"] = current_loop_gain(plant, pwm, r_i, "delayed")
    tfs["Ti_simplified"] = simplified_current_loop(params.l_f, r_i)
    tfs["Tv_ac_simplified"] = simplified_voltage_loop(params.c_f, r_v)
    return {name: (tf, bode_grid(tf, omega_min, omega_max, ppd)) for name, tf in tfs.items()}


def run_builtin(
    name: str,
    out_dir=None,
    *,
    dt: float | None = None,
    t_end: float | None = None,
    plot: bool = True,
    parallel: bool = True,
) -> BuiltinResult:
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"unknown built-in scenario {name!r}; choose from {BUILTIN_NAMES}")
    out = Path(out_dir) if out_dir is not None else None
    result = BuiltinResult(name)
    params = ConverterParams()

    if name == "bode":
        data = bode_data(params)
        fr_ac, fr_dc = data["Ti_ac"][1], data["Ti_dc"][1]
        mismatch = max(abs(a.mag - b.mag) / b.mag for a, b in zip(fr_ac, fr_dc))
        same = data["Ti_ac"][0] == data["Ti_dc"][0]
        result.checks.append(
            Check("|Ti_ac| vs |Ti_dc| max relative difference", mismatch, 0.0, same and mismatch == 0.0,
                  "coefficient-identical" if same else "coefficients differ")
        )
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            for key, (_, fr) in data.items():
                path = out / f"bode_{key}.csv"
                write_frequency_response_csv(fr, path)
                result.files.append(path)
        return result

    cfg = builtin_config(name, dt=dt, t_end=t_end)
    traces = run_config(cfg, parallel=parallel)
    result.traces = traces
    if name == "cc_step":
        result.reports, result.checks = cc_step_checks(traces, params)
        if plot:
            pu = _pu_current_trace(traces, params)
            result.svgs["cc_step"] = emit_plot(
                [("AC i_f,d", pu["ac"], "i_f_d_pu"), ("DC i_f", pu["dc"], "i_f_pu")],
                title="Current controller step response",
                ylabel="inductor current (p.u.)",
                t_window=(EVENT_TIME - 0.002, cfg.sim.t_end),
            )
    elif name == "disturbance":
        result.reports, result.checks = disturbance_checks(traces, params)
        result.checks += voltage_dip_checks(traces["ac"])
        if plot:
            result.svgs["disturbance"] = emit_plot(
                [("AC omega", traces["ac"], "omega_pu"), ("DC v_o", traces["dc"], "v_o_pu")],
                title="Disturbance response",
                ylabel="omega, v_o (p.u.)",
            )
            result.svgs["voltage_dip"] = emit_plot(
                [("AC |v_o|", traces["ac"], "v_o_mag_pu")], title="AC terminal voltage", ylabel="|v_o| (p.u.)",
            )
    else:
        result.checks = voltage_dip_checks(traces["ac"])
        if plot:
            result.svgs["voltage_dip"] = emit_plot(
                [("AC |v_o|", traces["ac"], "v_o_mag_pu")], title="AC terminal voltage", ylabel="|v_o| (p.u.)",
            )

    if out is not None:
        result.files += write_traces(cfg, traces, out, stem=name)
        for key, svg in result.svgs.items():
            path = out / f"{key}.svg"
            path.write_text(svg, encoding="utf-8", newline="")
            result.files.append(path)
        if result.reports:
            path = out / f"{name}_reports.csv"
            path.write_text(reports_to_csv(result.reports), encoding="utf-8", newline="")
            result.files.append(path)
    return result
