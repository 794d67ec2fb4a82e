"""Small-signal LC filter plant and current/voltage loop gains.

The same formulas serve the DC half-bridge and one decoupled dq axis of the
three-phase inverter; only the component values differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from dualgrid.core import RationalTF, simplify

__all__ = [
    "PlantKind",
    "PlantParams",
    "PlantTFs",
    "PwmDelay",
    "derive_plant",
    "current_loop_gain",
    "simplified_current_loop",
    "simplified_voltage_loop",
]


class PlantKind(str, Enum):
    AC_DQ_AXIS = "ac_dq_axis"
    DC = "dc"


@dataclass(frozen=True)
class PlantParams:
    v_in: float
    l_f: float
    c_out: float
    kind: PlantKind = PlantKind.DC

    def __post_init__(self):
        if not (self.v_in > 0 and self.l_f > 0 and self.c_out > 0):
            raise ValueError(f"plant values must be positive: {self}")

    @property
    def resonance(self) -> float:
        """LC resonance in rad/s."""
        return (self.l_f * self.c_out) ** -0.5


@dataclass(frozen=True)
class PlantTFs:
    g_di: RationalTF
    g_oi: RationalTF
    g_dv: RationalTF
    z_o: RationalTF
    params: PlantParams


@dataclass(frozen=True)
class PwmDelay:
    """First-order modulator lag 1/(1 + s*tau); the 1/v_in gain is kept separately."""

    time_constant: float
    v_in: float

    def __post_init__(self):
        if not self.time_constant > 0:
            raise ValueError("PWM delay time constant must be positive")

    @property
    def gain(self) -> float:
        return 1.0 / self.v_in

    @property
    def tf(self) -> RationalTF:
        return RationalTF((1.0,), (1.0, self.time_constant))


def derive_plant(params: PlantParams) -> PlantTFs:
    v, l, c = params.v_in, params.l_f, params.c_out
    den = (1.0, 0.0, l * c)  # 1 + Y_C Z_L = 1 + s^2 LC
    return PlantTFs(
        g_di=RationalTF((0.0, v * c), den),
        g_oi=RationalTF((1.0,), den),
        g_dv=RationalTF((v,), den),
        z_o=RationalTF((0.0, l), den),
        params=params,
    )


def current_loop_gain(
    plant: PlantTFs, pwm: PwmDelay, r_i: RationalTF, feedforward: str = "ideal"
) -> RationalTF:
    """Open current-loop gain from current error to inductor current.

    ``feedforward="delayed"`` routes the output-voltage feedforward through the
    modulator lag, giving ``sC*G_t / (1 - G_t + s^2 LC) * R_i``.
    ``feedforward="ideal"`` cancels the output voltage exactly, and the
    capacitor drops out: ``G_t / (sL) * R_i``.
    """
    p = plant.params
    g_t = pwm.tf
    n_t, d_t = g_t.num, g_t.den
    if feedforward == "ideal":
        # sC G_t / (s^2 LC) with C cancelled symbolically
        num = n_t
        den = tuple(p.l_f * x for x in (0.0,) + d_t)
        loop = RationalTF(num, den)
    elif feedforward == "delayed":
        # [sC n_t/(D d_t)] / [(D d_t - n_t)/(D d_t)] = sC n_t / (D d_t - n_t)
        d_plant = plant.g_oi.den
        dd = _polymul(d_plant, d_t)
        den = tuple(x - (n_t[i] if i < len(n_t) else 0.0) for i, x in enumerate(dd))
        num = _polymul((0.0, p.c_out), n_t)
        loop = simplify(RationalTF(num, den))
    else:
        raise ValueError(f"feedforward must be 'ideal' or 'delayed', got {feedforward!r}")
    return loop * r_i


def _polymul(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return tuple(out)


def simplified_current_loop(l_f: float, r_i: RationalTF) -> RationalTF:
    if not l_f > 0:
        raise ValueError("inductance must be positive")
    return RationalTF((1.0,), (0.0, l_f)) * r_i


def simplified_voltage_loop(c_f: float, r_v: RationalTF) -> RationalTF:
    if not c_f > 0:
        raise ValueError("capacitance must be positive")
    return RationalTF((1.0,), (0.0, c_f)) * r_v
