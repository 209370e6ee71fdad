"""Linear time registration of each engine's life onto [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DomainError, FunctionalCurve, design_matrix
from .ingest import MultiSensorSeries


@dataclass(frozen=True, eq=False)
class RegisteredSeries:
    unit_id: int
    endpoint_cycle: int
    sensor_ids: tuple[int, ...]
    v: np.ndarray       # (T,) registered times, last one is 1
    values: np.ndarray  # (T, J), untouched sensor values


def register(series: MultiSensorSeries) -> RegisteredSeries:
    T = series.endpoint_cycle
    if T < 2:
        raise ValueError(f"unit {series.unit_id}: endpoint must be >= 2, got {T}")
    cycles = np.arange(1, T + 1)
    return RegisteredSeries(series.unit_id, T, series.sensor_ids, cycles / T, series.values)


def to_registered(t, endpoint: float) -> np.ndarray:
    """Map original cycles onto the registered axis, checking ``0 <= t <= T``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > endpoint):
        raise DomainError(f"cycle outside [0, {endpoint}]")
    return t / endpoint


def unregister_eval(curve: FunctionalCurve, endpoint: float, t, d: int = 0):
    """Value of a registered curve on the original cycle scale.

    Derivatives pick up a factor ``endpoint**-d`` from the chain rule.
    """
    if d not in (0, 1, 2):
        raise ValueError("derivative order must be 0, 1 or 2")
    scalar = np.ndim(t) == 0
    v = to_registered(np.atleast_1d(t), endpoint)
    vals = design_matrix(curve.basis, v, d) @ curve.coef / float(endpoint) ** d
    return float(vals[0]) if scalar else vals
