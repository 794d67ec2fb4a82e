"""Trace overlays in per-unit deviation form and steady-state checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from dualgrid.oracle import ReducedModel, reduced_step_response
from dualgrid.simcore import SimTrace

__all__ = [
    "ComparisonReport",
    "NotSettledError",
    "SamplingMismatchError",
    "align_and_compare",
    "deviation",
    "check_statics",
    "oracle_deviation",
    "rise_time",
    "reports_to_csv",
    "REPORT_CSV_COLUMNS",
]

REPORT_CSV_COLUMNS = (
    "name_a", "name_b", "max_abs_dev", "rms_dev", "steady_state_dev",
    "t_start", "t_end", "metric", "tolerance_used", "pass",
)


class NotSettledError(RuntimeError):
    pass


class SamplingMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ComparisonReport:
    signal_pair: tuple[str, str]
    max_abs_dev: float
    rms_dev: float
    steady_state_dev: float
    window: tuple[float, float]
    passed: bool
    tolerance_used: float
    metric: str = "max_abs"

    @property
    def pass_(self) -> bool:
        return self.passed

    def to_text(self) -> str:
        a, b = self.signal_pair
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"[{verdict}] {a} vs {b} over [{self.window[0]:g}, {self.window[1]:g}] s: "
            f"max|d|={self.max_abs_dev:.3e} rms={self.rms_dev:.3e} ss={self.steady_state_dev:.3e} "
            f"({self.metric} <= {self.tolerance_used:.3e})"
        )

    def csv_row(self) -> list:
        return [
            self.signal_pair[0], self.signal_pair[1], repr(self.max_abs_dev), repr(self.rms_dev),
            repr(self.steady_state_dev), repr(self.window[0]), repr(self.window[1]), self.metric,
            repr(self.tolerance_used), "true" if self.passed else "false",
        ]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["signal_pair"] = list(self.signal_pair)
        d["window"] = list(self.window)
        return d


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def deviation(trace: SimTrace, signal: str, t_ref: float, pre_window: float = 0.1) -> np.ndarray:
    """Signal minus its mean over ``[t_ref - pre_window, t_ref)``.

    Falls back to the sample at ``t_ref`` when nothing precedes it.
    """
    x = trace[signal]
    i_ref = trace.index_at(t_ref)
    i0 = max(trace.index_at(t_ref - pre_window), 0)
    if i_ref > i0:
        base = float(np.mean(x[i0:i_ref]))
    else:
        base = float(x[min(max(i_ref, 0), len(x) - 1)])
    return x - base


def align_and_compare(
    trace_a: SimTrace,
    sig_a: str,
    trace_b: SimTrace,
    sig_b: str,
    window: tuple[float, float],
    tol: float,
    *,
    metric: str = "max_abs",
    blank: float = 0.0,
    pre_window: float = 0.1,
) -> ComparisonReport:
    """Compare two signals as deviations from their pre-window means.

    ``blank`` seconds after the window start are excluded from the metrics.
    """
    if metric not in ("max_abs", "rms", "steady_state"):
        raise ValueError(f"unknown metric {metric!r}")
    if not math.isclose(trace_a.dt_record, trace_b.dt_record, rel_tol=1e-12) or trace_a.t0 != trace_b.t0:
        raise SamplingMismatchError(
            f"traces are sampled differently (dt {trace_a.dt_record} vs {trace_b.dt_record})"
        )
    t_start, t_end = window
    t_last = min(trace_a.t[-1], trace_b.t[-1])
    if not (trace_a.t0 <= t_start < t_end <= t_last + 1e-9):
        raise ValueError(f"window {window} is not inside both traces")
    da = deviation(trace_a, sig_a, t_start, pre_window)
    db = deviation(trace_b, sig_b, t_start, pre_window)
    sl = trace_a.window(t_start + blank, t_end)
    diff = np.abs(da[sl] - db[sl])
    n_tail = max(1, int(round(0.1 * len(diff))))
    max_abs = float(np.max(diff))
    rms = float(np.sqrt(np.mean(diff**2)))
    ss = float(abs(np.mean(da[sl][-n_tail:]) - np.mean(db[sl][-n_tail:])))
    value = {"max_abs": max_abs, "rms": rms, "steady_state": ss}[metric]
    return ComparisonReport(
        signal_pair=(sig_a, sig_b),
        max_abs_dev=max_abs,
        rms_dev=rms,
        steady_state_dev=ss,
        window=(float(t_start), float(t_end)),
        passed=bool(value <= tol),
        tolerance_used=float(tol),
        metric=metric,
    )


def check_statics(
    trace: SimTrace,
    signal: str,
    expected_ss: float,
    tol: float,
    *,
    t_event: float,
    final_window: float = 0.1,
    slope_tol: float = 1e-3,
) -> bool:
    """Mean deviation over the last ``final_window`` seconds against ``expected_ss``.

    Raises NotSettledError when the signal still drifts faster than ``slope_tol`` per second.
    """
    dev = deviation(trace, signal, t_event)
    t = trace.t
    sl = trace.window(t[-1] - final_window, t[-1])
    tail, t_tail = dev[sl], t[sl]
    if len(tail) >= 2:
        slope = float(np.polyfit(t_tail - t_tail[0], tail, 1)[0])
        if abs(slope) > slope_tol:
            raise NotSettledError(f"{signal} still moving at {slope:.3e} p.u./s")
    return bool(abs(float(np.mean(tail)) - expected_ss) <= tol)


def oracle_deviation(
    trace: SimTrace,
    signal: str,
    model: ReducedModel,
    u: float,
    t_event: float,
    skip: float = 0.05,
) -> float:
    """Max |trace - closed-form response| from ``t_event + skip`` to the end."""
    t = trace.t
    sl = trace.window(t_event + skip, t[-1])
    ref = reduced_step_response(model, u, t[sl] - t_event)
    return float(np.max(np.abs(trace[signal][sl] - ref)))


def rise_time(t: np.ndarray, x: np.ndarray, lo: float = 0.1, hi: float = 0.9) -> float:
    """10-90 % rise time of a step response given from the step instant on."""
    x0, x1 = x[0], x[-1]
    span = x1 - x0
    if span == 0:
        raise ValueError("signal does not move")
    frac = (x - x0) / span
    return _crossing(t, frac, hi) - _crossing(t, frac, lo)


def _crossing(t, frac, level):
    i = int(np.argmax(frac >= level))
    if frac[i] < level:
        raise ValueError(f"signal never reaches {level:.0%} of its step")
    if i == 0:
        return float(t[0])
    # linear interpolation between samples
    f0, f1 = frac[i - 1], frac[i]
    return float(t[i - 1] + (level - f0) / (f1 - f0) * (t[i] - t[i - 1]))
