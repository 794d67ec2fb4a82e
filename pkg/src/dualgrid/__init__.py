"""Averaged AC grid-forming and DC I-V droop converter models with duality checks."""

from dualgrid.core import PerUnitBase, RationalTF, bode_grid, pu_base_new, tf_arith, tf_eval
from dualgrid.tuning import (
    AcDroopParams,
    DcDroopParams,
    PiGains,
    duality_map,
    swing_from_droop,
    tune_current_controller,
    tune_voltage_controller,
)

__version__ = "0.1.0"

__all__ = [
    "AcDroopParams",
    "DcDroopParams",
    "PerUnitBase",
    "PiGains",
    "RationalTF",
    "bode_grid",
    "duality_map",
    "pu_base_new",
    "swing_from_droop",
    "tf_arith",
    "tf_eval",
    "tune_current_controller",
    "tune_voltage_controller",
]
