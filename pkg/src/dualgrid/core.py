"""Per-unit bases and rational transfer-function algebra in the Laplace variable s."""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "PerUnitBase",
    "pu_base_new",
    "RationalTF",
    "PoleEvaluationError",
    "tf_arith",
    "tf_eval",
    "simplify",
    "FreqResponsePoint",
    "FrequencyResponse",
    "bode_grid",
    "write_frequency_response_csv",
    "FREQ_CSV_COLUMNS",
]


@dataclass(frozen=True)
class PerUnitBase:
    """Power/voltage base with derived current and impedance bases.

    Inductance and capacitance are normalized to time constants in seconds:
    ``L / z_base`` and ``C * z_base``.
    """

    s_base: float
    v_base: float
    i_base: float = field(init=False)
    z_base: float = field(init=False)

    def __post_init__(self):
        if not (self.s_base > 0 and self.v_base > 0):
            raise ValueError(
                f"per-unit bases must be positive, got s_base={self.s_base}, v_base={self.v_base}"
            )
        object.__setattr__(self, "i_base", self.s_base / self.v_base)
        object.__setattr__(self, "z_base", self.v_base**2 / self.s_base)

    def _base_of(self, kind: str) -> float:
        try:
            return {
                "voltage": self.v_base,
                "current": self.i_base,
                "power": self.s_base,
                "impedance": self.z_base,
            }[kind]
        except KeyError:
            raise ValueError(f"unknown per-unit quantity kind {kind!r}") from None

    def to_pu(self, value, kind: str):
        return value / self._base_of(kind)

    def from_pu(self, value, kind: str):
        return value * self._base_of(kind)

    def capacitance_time(self, c: float) -> float:
        """Capacitance in farads -> per-unit time constant in seconds."""
        return c * self.z_base

    def inductance_time(self, l: float) -> float:
        return l / self.z_base


def pu_base_new(s_base: float, v_base: float) -> PerUnitBase:
    return PerUnitBase(float(s_base), float(v_base))


def _canonical(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    if not c:
        c = [0.0]
    return tuple(c)


@dataclass(frozen=True)
class RationalTF:
    """num(s)/den(s); coefficients are stored in ascending powers of s."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _canonical(self.num)
        den = _canonical(self.den)
        if all(c == 0.0 for c in den):
            raise ZeroDivisionError("transfer function denominator is the zero polynomial")
        if not all(math.isfinite(c) for c in num + den):
            raise ValueError("transfer function coefficients must be finite")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def constant(cls, k: float) -> RationalTF:
        return cls((k,), (1.0,))

    @classmethod
    def s(cls) -> RationalTF:
        return cls((0.0, 1.0), (1.0,))

    @classmethod
    def pi(cls, k_p: float, t_i: float) -> RationalTF:
        """PI controller k_p * (1 + s*t_i) / (s*t_i)."""
        return cls((k_p, k_p * t_i), (0.0, t_i))

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.num)

    def __call__(self, omega: float) -> complex:
        return tf_eval(self, omega)

    def __add__(self, other):
        return tf_arith(self, _as_tf(other), "add")

    def __radd__(self, other):
        return tf_arith(_as_tf(other), self, "add")

    def __sub__(self, other):
        return tf_arith(self, _as_tf(other), "sub")

    def __rsub__(self, other):
        return tf_arith(_as_tf(other), self, "sub")

    def __mul__(self, other):
        return tf_arith(self, _as_tf(other), "mul")

    def __rmul__(self, other):
        return tf_arith(_as_tf(other), self, "mul")

    def __truediv__(self, other):
        return tf_arith(self, _as_tf(other), "div")

    def __rtruediv__(self, other):
        return tf_arith(_as_tf(other), self, "div")

    def __neg__(self):
        return RationalTF(tuple(-c for c in self.num), self.den)

    def __repr__(self):
        return f"RationalTF(num={list(self.num)}, den={list(self.den)})"


def _as_tf(x) -> RationalTF:
    if isinstance(x, RationalTF):
        return x
    return RationalTF.constant(float(x))


def tf_arith(a: RationalTF, b: RationalTF, op: str) -> RationalTF:
    """Combine two transfer functions without any pole-zero cancellation."""
    if op == "add":
        num = P.polyadd(P.polymul(a.num, b.den), P.polymul(b.num, a.den))
        den = P.polymul(a.den, b.den)
    elif op == "sub":
        num = P.polysub(P.polymul(a.num, b.den), P.polymul(b.num, a.den))
        den = P.polymul(a.den, b.den)
    elif op == "mul":
        num = P.polymul(a.num, b.num)
        den = P.polymul(a.den, b.den)
    elif op == "div":
        if b.is_zero:
            raise ZeroDivisionError("division by the zero transfer function")
        num = P.polymul(a.num, b.den)
        den = P.polymul(a.den, b.num)
    else:
        raise ValueError(f"unknown transfer-function operation {op!r}")
    return RationalTF(tuple(num), tuple(den))


def simplify(tf: RationalTF) -> RationalTF:
    """Cancel common powers of s, and collapse num = k*den to the constant k.

    Only exact cancellations are made; numerically close factors are left alone.
    """
    num, den = list(tf.num), list(tf.den)
    if tf.is_zero:
        return RationalTF((0.0,), (1.0,))
    while len(num) > 1 and len(den) > 1 and num[0] == 0.0 and den[0] == 0.0:
        num.pop(0)
        den.pop(0)
    if len(num) == len(den):
        i0 = next(i for i, c in enumerate(den) if c != 0.0)
        ratio = num[i0] / den[i0]
        if all(n == ratio * d for n, d in zip(num, den)):
            return RationalTF.constant(ratio)
    return RationalTF(tuple(num), tuple(den))


class PoleEvaluationError(ZeroDivisionError):
    def __init__(self, omega: float):
        super().__init__(f"transfer function evaluated at a pole, omega={omega!r} rad/s")
        self.omega = omega


def _horner(coeffs: Sequence[float], s: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def tf_eval(tf: RationalTF, omega: float) -> complex:
    """Evaluate tf(j*omega)."""
    s = 1j * omega
    d = _horner(tf.den, s)
    if d == 0:
        raise PoleEvaluationError(omega)
    return _horner(tf.num, s) / d


@dataclass(frozen=True)
class FreqResponsePoint:
    omega: float
    value: complex

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"frequency must be positive, got {self.omega}")

    @property
    def mag(self) -> float:
        return abs(self.value)

    @property
    def phase_deg(self) -> float:
        return math.degrees(cmath.phase(self.value))


@dataclass(frozen=True)
class FrequencyResponse:
    """Evaluated grid; ``skipped`` lists grid frequencies that hit a pole."""

    points: tuple[FreqResponsePoint, ...]
    skipped: tuple[float, ...] = ()

    def __iter__(self) -> Iterator[FreqResponsePoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def bode_grid(
    tf: RationalTF, omega_min: float, omega_max: float, points_per_decade: int
) -> FrequencyResponse:
    if not (0 < omega_min < omega_max) or points_per_decade < 1:
        raise ValueError(
            "empty frequency grid: need 0 < omega_min < omega_max and points_per_decade >= 1"
        )
    decades = math.log10(omega_max / omega_min)
    n = int(math.ceil(decades * points_per_decade - 1e-9)) + 1
    grid = np.logspace(math.log10(omega_min), math.log10(omega_max), n)
    # logspace endpoints can drift by an ulp
    grid[0], grid[-1] = omega_min, omega_max
    points, skipped = [], []
    for w in grid:
        try:
            points.append(FreqResponsePoint(float(w), tf_eval(tf, float(w))))
        except PoleEvaluationError:
            skipped.append(float(w))
    return FrequencyResponse(tuple(points), tuple(skipped))


FREQ_CSV_COLUMNS = ("omega_rad_s", "re", "im", "mag", "phase_deg")


def write_frequency_response_csv(points: Iterable[FreqResponsePoint], dest=None) -> str:
    """Write the response as CSV to ``dest`` (path or None) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FREQ_CSV_COLUMNS)
    for p in points:
        w.writerow([repr(p.omega), repr(p.value.real), repr(p.value.imag), repr(p.mag), repr(p.phase_deg)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8", newline="")
    return text
