"""Command-line front end.

Exit status: 0 all checks pass, 1 a comparison failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
from pathlib import Path

from dualgrid.core import write_frequency_response_csv
from dualgrid.params import ConverterParams, ac_peak_bases
from dualgrid.scenario import (
    BUILTIN_NAMES,
    ConfigError,
    bode_data,
    load_config,
    run_builtin,
    run_config,
    write_traces,
)
from dualgrid.simcore import SimConfig, SimulationDiverged
from dualgrid.tuning import timescale_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def tuning_table(params: ConverterParams | None = None) -> list[tuple[str, float, str]]:
    p = params or ConverterParams()
    base = p.base
    v_pk, i_pk = ac_peak_bases(base)
    ci, cv = p.current_gains(), p.voltage_gains()
    dc, ac = p.dc_droop(), p.ac_droop()
    ts = timescale_check(ac.omega_c, p.omega_voltage)
    return [
        ("s_base", base.s_base, "W"),
        ("v_base", base.v_base, "V"),
        ("i_base", base.i_base, "A"),
        ("z_base", base.z_base, "ohm"),
        ("v_pk_base_ac", v_pk, "V"),
        ("i_pk_base_ac", i_pk, "A"),
        ("omega_bi", p.omega_current, "rad/s"),
        ("k_p_current", ci.k_p, "V/A"),
        ("t_i_current", ci.t_i, "s"),
        ("k_i_current", ci.k_i, "V/(A s)"),
        ("omega_bv", p.omega_voltage, "rad/s"),
        ("k_p_voltage", cv.k_p, "A/V"),
        ("t_i_voltage", cv.t_i, "s"),
        ("k_i_voltage", cv.k_i, "A/(V s)"),
        ("pwm_tau", p.tau_pwm, "s"),
        ("c_dc_pu", dc.c_dc_pu, "s"),
        ("k_d_dc", dc.k_d_dc, "p.u."),
        ("h", ac.h, "s"),
        ("k_d_ac", ac.k_d_ac, "p.u."),
        ("m_p", ac.m_p, "p.u."),
        ("omega_c", ac.omega_c, "rad/s"),
        ("droop_tau", dc.c_dc_pu / dc.k_d_dc, "s"),
        ("omega_bv_over_omega_c", ts.ratio, "-"),
    ]


def format_table(rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "value", "unit"])
        for name, value, unit in rows:
            w.writerow([name, repr(float(value)), unit])
        return buf.getvalue()
    width = max(len(r[0]) for r in rows)
    return "".join(f"{name:<{width}}  {value:>14.6g}  {unit}\n" for name, value, unit in rows)


def _cmd_tune(args) -> int:
    rows = tuning_table()
    sys.stdout.write(format_table(rows, args.format))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "tuning.csv").write_text(format_table(rows, "csv"), encoding="utf-8", newline="")
        (out / "tuning.txt").write_text(format_table(rows, "text"), encoding="utf-8", newline="")
    return EXIT_OK


def _cmd_bode(args) -> int:
    if not 0 < args.omega_min < args.omega_max:
        raise ConfigError("need 0 < --omega-min < --omega-max")
    data = bode_data(omega_min=args.omega_min, omega_max=args.omega_max, ppd=args.ppd)
    for name, (tf, fr) in data.items():
        print(f"{name}: {len(fr)} points, |T| at {fr.omega[0]:g} rad/s = {abs(fr.values[0]):.6g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, (_, fr) in data.items():
            write_frequency_response_csv(fr, out / f"bode_{name}.csv")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.timestep is not None or args.t_end is not None:
        try:
            sim = SimConfig(
                t_end=args.t_end if args.t_end is not None else cfg.sim.t_end,
                dt=args.timestep if args.timestep is not None else cfg.sim.dt,
                t_sample=cfg.sim.t_sample,
                record_decimation=cfg.sim.record_decimation,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if any(ev.t > sim.t_end for _, ev in cfg.events):
            raise ConfigError(f"an event lies beyond --t-end {sim.t_end}")
        cfg = dataclasses.replace(cfg, sim=sim)
    traces = run_config(cfg)
    out = args.out or cfg.csv_dir
    for conv, tr in sorted(traces.items()):
        print(f"{conv}: {len(tr)} samples, t_end = {tr.t[-1]:g} s")
    if out:
        for path in write_traces(cfg, traces, Path(out)):
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    result = run_builtin(args.scenario, args.out, dt=args.timestep, t_end=args.t_end, plot=not args.no_plot)
    print(result.summary())
    for path in result.files:
        print(f"wrote {path}")
    return EXIT_OK if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualgrid", description="Averaged AC/DC droop converter simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("--out", help="output directory")
        if sim:
            p.add_argument("--timestep", type=float, help="RK4 step in seconds")
            p.add_argument("--t-end", dest="t_end", type=float, help="simulation horizon in seconds")

    p = sub.add_parser("tune", help="print the controller and droop parameter table")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    common(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("bode", help="frequency responses of the loop gains")
    p.add_argument("--omega-min", type=float, default=1.0)
    p.add_argument("--omega-max", type=float, default=1e5)
    p.add_argument("--ppd", type=int, default=10, help="points per decade")
    common(p)
    p.set_defaults(func=_cmd_bode)

    p = sub.add_parser("simulate", help="run a JSON scenario file")
    p.add_argument("--config", required=True)
    common(p, sim=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run a built-in reference scenario and its checks")
    p.add_argument("--scenario", required=True, choices=BUILTIN_NAMES)
    p.add_argument("--no-plot", action="store_true")
    common(p, sim=True)
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
