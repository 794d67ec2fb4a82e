"""Fixed-step co-simulation: RK4 plant integration, sampled controllers, step events.

Converter models keep their hot loop in a numba kernel and expose it through
:meth:`ConverterModel.advance`; :func:`run` owns the event schedule and the trace.
"""

from __future__ import annotations

import copy
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit

from dualgrid.tuning import PiGains

__all__ = [
    "SimConfig",
    "StepEvent",
    "SimTrace",
    "DiscretePi",
    "SimulationDiverged",
    "UnknownSignalError",
    "ConverterModel",
    "integrate_step",
    "pi_update",
    "pi_step",
    "run",
]


class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, detail: str = ""):
        super().__init__(f"simulation diverged at t={t:.9g} s" + (f": {detail}" if detail else ""))
        self.t = t


class UnknownSignalError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float = 1e-6
    t_sample: float = 1e-5
    record_decimation: int = 100

    def __post_init__(self):
        if not (self.t_end > 0 and self.dt > 0 and self.t_sample > 0):
            raise ValueError(f"t_end, dt and t_sample must be positive: {self}")
        if int(self.record_decimation) != self.record_decimation or self.record_decimation < 1:
            raise ValueError("record_decimation must be an integer >= 1")
        n = round(self.t_sample / self.dt)
        if n < 1 or abs(n * self.dt - self.t_sample) > 1e-9 * self.t_sample:
            raise ValueError(f"t_sample={self.t_sample} is not an integer multiple of dt={self.dt}")

    @property
    def substeps(self) -> int:
        """Continuous steps per controller sample."""
        return round(self.t_sample / self.dt)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def dt_record(self) -> float:
        return self.dt * self.record_decimation

    def step_index(self, t: float) -> int:
        """First step boundary at or after ``t``."""
        return int(math.ceil(t / self.dt - 1e-6))


@dataclass(frozen=True)
class StepEvent:
    t: float
    target: str
    new_value: float


@dataclass
class SimTrace:
    t0: float
    dt_record: float
    signals: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.signals.values()}
        if len(lengths) > 1:
            raise ValueError("all trace signals must have equal length")

    def __len__(self) -> int:
        return len(next(iter(self.signals.values()))) if self.signals else 0

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.signals[name]
        except KeyError:
            raise UnknownSignalError(f"trace has no signal {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.signals

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.signals)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt_record * np.arange(len(self))

    def index_at(self, t: float) -> int:
        """Index of the first sample at or after ``t``."""
        return int(math.ceil((t - self.t0) / self.dt_record - 1e-6))

    def window(self, t_start: float, t_end: float) -> slice:
        i0 = max(self.index_at(t_start), 0)
        i1 = min(int(math.floor((t_end - self.t0) / self.dt_record + 1e-6)), len(self) - 1)
        return slice(i0, i1 + 1)

    def select(self, names: Sequence[str]) -> SimTrace:
        return SimTrace(self.t0, self.dt_record, {n: self[n] for n in names})

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t_s",) + self.names)
        cols = [self.signals[n] for n in self.names]
        for i in range(len(self)):
            t = round(self.t0 + i * self.dt_record, 12)
            w.writerow([repr(t)] + [repr(float(c[i])) for c in cols])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, src) -> SimTrace:
        text = Path(src).read_text(encoding="utf-8") if not isinstance(src, io.StringIO) else src.getvalue()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        if header[0] != "t_s":
            raise ValueError("trace CSV must start with a t_s column")
        t = body[:, 0]
        dt_record = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(float(t[0]), dt_record, {n: body[:, j + 1].copy() for j, n in enumerate(header[1:])})


@njit(cache=True, nogil=True)
def pi_update(acc, i, k_p, k_i_ts, limit, error):
    """Forward-Euler PI on ``acc[i]``; integration is frozen while the output clamps."""
    u = k_p * error + acc[i]
    if u > limit:
        return limit
    if u < -limit:
        return -limit
    acc[i] += k_i_ts * error
    return u


@dataclass
class DiscretePi:
    gains: PiGains
    acc: float = 0.0
    limit: float | None = None

    def step(self, error: float, t_sample: float) -> float:
        return pi_step(self, error, t_sample)


def pi_step(ctrl: DiscretePi, error: float, t_sample: float) -> float:
    if not t_sample > 0:
        raise ValueError("t_sample must be positive")
    buf = np.array([ctrl.acc])
    limit = math.inf if ctrl.limit is None else abs(ctrl.limit)
    u = pi_update(buf, 0, ctrl.gains.k_p, ctrl.gains.k_i * t_sample, limit, float(error))
    ctrl.acc = float(buf[0])
    return u


def integrate_step(
    state: np.ndarray, derivative_fn: Callable[[np.ndarray], np.ndarray], dt: float, t: float = 0.0
) -> np.ndarray:
    """One classical RK4 step of dx/dt = derivative_fn(x)."""
    x = np.asarray(state, dtype=float)
    k1 = np.asarray(derivative_fn(x), dtype=float)
    k2 = np.asarray(derivative_fn(x + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(derivative_fn(x + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(derivative_fn(x + dt * k3), dtype=float)
    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k2)) and np.all(np.isfinite(k3)) and np.all(np.isfinite(k4))):
        raise SimulationDiverged(t, "non-finite derivative")
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class ConverterModel:
    """Interface used by :func:`run`.

    Subclasses define ``signal_names``, ``steppable``, :meth:`set_input` and
    :meth:`advance`. ``advance(k0, k1, config, rec)`` processes step boundaries
    k0..k1-1: run the controller on sample boundaries, record on decimation
    boundaries, then integrate to the next boundary unless it is the last one.
    It returns the step index where a non-finite state appeared, or -1.
    """

    signal_names: tuple[str, ...] = ()
    steppable: tuple[str, ...] = ()

    def set_input(self, name: str, value: float) -> None:
        raise NotImplementedError

    def advance(self, k0: int, k1: int, config: SimConfig, rec: np.ndarray) -> int:
        raise NotImplementedError

    def copy(self):
        return copy.deepcopy(self)


def run(model: ConverterModel, config: SimConfig, events: Sequence[StepEvent] = ()) -> SimTrace:
    """Simulate a copy of ``model``; the passed model keeps its initial state."""
    events = list(events)
    for prev, ev in zip(events, events[1:]):
        if ev.t < prev.t:
            raise ValueError("events must be sorted by time")
    for ev in events:
        if ev.target not in model.steppable:
            raise UnknownSignalError(
                f"event target {ev.target!r} is not steppable; choose from {model.steppable}"
            )
        if not 0 <= ev.t <= config.t_end:
            raise ValueError(f"event at t={ev.t} lies outside [0, {config.t_end}]")

    m = model.copy()
    n = config.n_steps
    dec = config.record_decimation
    rec = np.empty((len(m.signal_names), n // dec + 1))
    k = 0
    for ev in events:
        k_ev = config.step_index(ev.t)
        if k_ev > k:
            _advance(m, k, k_ev, config, rec)
            k = k_ev
        m.set_input(ev.target, float(ev.new_value))
    _advance(m, k, n + 1, config, rec)
    return SimTrace(0.0, config.dt_record, {name: rec[j] for j, name in enumerate(m.signal_names)})


def _advance(m: ConverterModel, k0: int, k1: int, config: SimConfig, rec: np.ndarray) -> None:
    bad = m.advance(k0, k1, config, rec)
    if bad >= 0:
        raise SimulationDiverged(bad * config.dt, "non-finite state")
