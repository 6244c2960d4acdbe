"""Truncated solutions of the fifth Painleve equation: transseries, Borel-Pade
summation, complex-path integration, connection constants and pole arrays."""

__version__ = "0.1.0"

from .errors import TronqueeError  # noqa: E402
from .series_engine import FamilySpec, Params5, compute_transseries  # noqa: E402
from .summation import sum_series, sum_transseries  # noqa: E402
from .integrator import PathSpec, integrate_path, locate_pole  # noqa: E402
from .asymptotics import (  # noqa: E402
    estimate_connection,
    predict_pole_array,
    stokes_difference,
    verify_pole_array,
)
from .transforms import SymmetryMap, compose, map_params, map_state  # noqa: E402

__all__ = [
    "TronqueeError", "FamilySpec", "Params5", "compute_transseries", "sum_series",
    "sum_transseries", "PathSpec", "integrate_path", "locate_pole", "estimate_connection",
    "predict_pole_array", "stokes_difference", "verify_pole_array", "SymmetryMap", "compose",
    "map_params", "map_state",
]
