"""Closed-form first-order references for the droop dynamics.

AC:  2H dw/dt = p_set - p + K_d (w_set - w)
DC:  C  dv/dt = i_set - i_o + K_d (v_set - v)

Both read ``M dx/dt = -u + K_d (x_set - x)`` for a disturbance step ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dualgrid.tuning import AcDroopParams, DcDroopParams

__all__ = ["ReducedModel", "UnboundedResponseError", "reduced_step_response", "duality_twin"]


class UnboundedResponseError(ValueError):
    pass


@dataclass(frozen=True)
class ReducedModel:
    inertia_like: float
    k_d: float
    x_set: float = 1.0
    u_set: float = 0.0

    def __post_init__(self):
        if not self.inertia_like > 0:
            raise ValueError("inertia_like must be positive")
        if self.k_d < 0:
            raise ValueError("k_d must be non-negative")

    @classmethod
    def from_ac(cls, droop: AcDroopParams, omega_set: float = 1.0, p_set: float = 0.0) -> ReducedModel:
        return cls(2.0 * droop.h, droop.k_d_ac, omega_set, p_set)

    @classmethod
    def from_dc(cls, droop: DcDroopParams, v_set: float = 1.0, i_set: float = 0.0) -> ReducedModel:
        return cls(droop.c_dc_pu, droop.k_d_dc, v_set, i_set)

    @property
    def tau(self) -> float:
        return self.inertia_like / self.k_d if self.k_d > 0 else math.inf

    def steady_state(self, u: float) -> float:
        if self.k_d == 0:
            if u != 0:
                raise UnboundedResponseError("no damping: a non-zero disturbance ramps without bound")
            return self.x_set
        return self.x_set - u / self.k_d


def reduced_step_response(model: ReducedModel, u: float, t):
    """x(t) after a disturbance step ``u`` (p.u.) applied at t = 0; ``t`` may be an array."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    if u == 0:
        out = np.full_like(t_arr, model.x_set)
    else:
        x_inf = model.steady_state(u)
        out = model.x_set + (x_inf - model.x_set) * (1.0 - np.exp(-t_arr / model.tau))
    return float(out) if np.ndim(t) == 0 else out


def duality_twin(ac: ReducedModel, dc: ReducedModel, rel_tol: float = 1e-12) -> bool:
    return math.isclose(ac.inertia_like, dc.inertia_like, rel_tol=rel_tol) and math.isclose(
        ac.k_d, dc.k_d, rel_tol=rel_tol
    )
