"""Similarity-based failure-time, trajectory and alarm prediction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisSpec, design_matrix


class PrognosisError(ValueError):
    pass


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class TrainingBank:
    """Smoothed training curves with their failure cycles and group labels.

    Values of every training curve at each integer cycle ``0..T_m`` of its
    own life (original scale) are tabulated up front; all comparisons on the
    original scale read from these tables.
    """

    basis: BasisSpec
    sensor_ids: tuple[int, ...]
    unit_ids: tuple[int, ...]
    endpoints: np.ndarray   # (n,) failure cycles
    labels: tuple[str, ...]
    coefs: np.ndarray       # (n, J, B) registered-scale coefficients
    cycle_values: list = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.unit_ids)
        if self.coefs.shape[0] != n or len(self.endpoints) != n or len(self.labels) != n:
            raise ValueError("training bank arrays are not aligned")
        tabs = []
        for i in range(n):
            T = int(self.endpoints[i])
            Phi = design_matrix(self.basis, np.arange(T + 1) / T)
            tabs.append(Phi @ self.coefs[i].T)  # (T+1, J), row t = cycle t
        object.__setattr__(self, "cycle_values", tabs)

    def index_of(self, unit_id: int) -> int:
        return self.unit_ids.index(unit_id)


def observed_cycle_values(basis: BasisSpec, coefs: np.ndarray, observed: int) -> np.ndarray:
    """A test engine's smoothed values at cycles ``1..observed``, shape (J, observed)."""
    Phi = design_matrix(basis, np.arange(1, observed + 1) / observed)
    return (Phi @ coefs.T).T


def normalize_at_grid(pool_values: np.ndarray, test_values: np.ndarray,
                      grid: Sequence[int] | None = None, sensor_ids: Sequence[int] | None = None):
    """Divide pool and test values by the pointwise pool mean of each sensor.

    ``pool_values`` is (m, J, G), ``test_values`` is (J, G).
    """
    pool_values = np.asarray(pool_values, dtype=float)
    test_values = np.asarray(test_values, dtype=float)
    if pool_values.ndim != 3 or pool_values.shape[1:] != test_values.shape:
        raise PrognosisError(f"shape mismatch: pool {pool_values.shape} vs test {test_values.shape}")
    mean = pool_values.mean(axis=0)
    bad = np.abs(mean) < 1e-12
    if bad.any():
        j, g = map(int, np.argwhere(bad)[0])
        sid = sensor_ids[j] if sensor_ids is not None else j
        cyc = grid[g] if grid is not None else g
        raise PrognosisError(f"degenerate normalisation: sensor {sid} has pool mean ~0 at cycle {cyc}")
    return pool_values / mean, test_values / mean


def multivariate_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Grid mean of the pointwise Euclidean distance across sensors; a, b are (J, G)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise PrognosisError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean(np.sqrt(np.sum((a - b) ** 2, axis=0))))


@dataclass(frozen=True)
class NeighborRanking:
    test_unit_id: int
    test_endpoint: int
    eligible_pool: tuple[int, ...]
    distances: tuple[float, ...]        # aligned with eligible_pool
    order: tuple[int, ...]              # unit ids, nearest first
    order_endpoints: tuple[int, ...]    # failure cycles aligned with order
    group_filter_dropped: bool = False


def rank_neighbors(
    test_coefs: np.ndarray,
    test_endpoint: int,
    test_label: str | None,
    bank: TrainingBank,
    scale: str = "original",
    fallback: bool = True,
    test_unit_id: int = -1,
) -> NeighborRanking:
    """Order the eligible training engines by multivariate distance to a test engine.

    Eligible engines outlive the test engine's observed length and, when a
    label is given, share its group. If that leaves nobody and ``fallback``
    is set, the group filter is dropped (the longevity filter never is).
    """
    if scale not in ("original", "registered"):
        raise ValueError(f"unknown comparison scale {scale!r}")
    T = int(test_endpoint)
    alive = np.asarray(bank.endpoints) > T
    same = np.array([test_label is None or lab == test_label for lab in bank.labels])
    pool = np.nonzero(alive & same)[0]
    dropped = False
    if len(pool) == 0 and fallback and test_label is not None:
        pool = np.nonzero(alive)[0]
        dropped = True
    if len(pool) == 0:
        hint = "" if fallback else " (enable the group fallback to widen the pool)"
        raise PrognosisError(f"test unit {test_unit_id}: no training engine outlives cycle {T}{hint}")

    if scale == "original":
        grid = np.arange(1, T + 1)
        pool_vals = np.stack([bank.cycle_values[i][1 : T + 1].T for i in pool])
        test_vals = observed_cycle_values(bank.basis, test_coefs, T)
    else:
        u = np.arange(1, T + 1) / T
        Phi = design_matrix(bank.basis, u)
        grid = u
        pool_vals = np.einsum("gb,mjb->mjg", Phi, bank.coefs[pool])
        test_vals = (Phi @ test_coefs.T).T

    pool_n, test_n = normalize_at_grid(pool_vals, test_vals, grid, bank.sensor_ids)
    dist = np.sqrt(np.sum((pool_n - test_n) ** 2, axis=1)).mean(axis=1)
    ids = [bank.unit_ids[i] for i in pool]
    order = sorted(range(len(pool)), key=lambda r: (dist[r], ids[r]))
    return NeighborRanking(
        test_unit_id=test_unit_id,
        test_endpoint=T,
        eligible_pool=tuple(ids),
        distances=tuple(float(d) for d in dist),
        order=tuple(ids[r] for r in order),
        order_endpoints=tuple(int(bank.endpoints[pool[r]]) for r in order),
        group_filter_dropped=dropped,
    )


@dataclass(frozen=True, eq=False)
class RulPrediction:
    test_unit_id: int
    observed_cycle: int
    k: int
    neighbors: tuple[int, ...]
    predicted_failure_mean: int
    predicted_failure_median: int
    alarm_cycle: int
    alarm_passed: bool
    trajectory_cycles: np.ndarray | None = None   # (L,)
    trajectories: np.ndarray | None = None        # (L, J)

    @property
    def rul_mean(self) -> int:
        return self.predicted_failure_mean - self.observed_cycle

    @property
    def rul_median(self) -> int:
        return self.predicted_failure_median - self.observed_cycle

    def predicted_failure(self, aggregate: str = "mean") -> int:
        return self.predicted_failure_mean if aggregate == "mean" else self.predicted_failure_median

    def rul(self, aggregate: str = "mean") -> int:
        return self.predicted_failure(aggregate) - self.observed_cycle


def alarm_point(predicted_failure: int, observed_cycle: int, fraction: float = 0.8) -> tuple[int, bool]:
    """Alarm cycle at ``fraction`` of the predicted life, and whether it is already behind us."""
    if not 0 < fraction < 1:
        raise ValueError("alarm fraction must lie in (0, 1)")
    cyc = round_half_up(fraction * predicted_failure)
    return cyc, cyc <= observed_cycle


def predict_rul(ranking: NeighborRanking, k: int, alarm_fraction: float = 0.8,
                test_unit_id: int | None = None) -> RulPrediction:
    if not 1 <= k <= len(ranking.order):
        raise PrognosisError(f"k={k} outside 1..{len(ranking.order)} (eligible pool size)")
    ends = np.array(ranking.order_endpoints[:k], dtype=float)
    f_mean = round_half_up(float(np.mean(ends)))
    f_median = round_half_up(float(np.median(ends)))
    alarm, passed = alarm_point(f_mean, ranking.test_endpoint, alarm_fraction)
    return RulPrediction(
        test_unit_id=ranking.test_unit_id if test_unit_id is None else test_unit_id,
        observed_cycle=ranking.test_endpoint,
        k=k,
        neighbors=ranking.order[:k],
        predicted_failure_mean=f_mean,
        predicted_failure_median=f_median,
        alarm_cycle=alarm,
        alarm_passed=passed,
    )


def predict_trajectories(ranking: NeighborRanking, k: int, horizon: int, bank: TrainingBank,
                         start: int | None = None):
    """Mean neighbour sensor values at each cycle from ``start`` (default: now) to ``horizon``.

    Only neighbours still alive at a cycle contribute to it; cycles where no
    neighbour is alive come back as NaN. Returns ``(cycles, values)`` with
    values of shape (L, J).
    """
    start = ranking.test_endpoint if start is None else start
    cycles = np.arange(start, horizon + 1)
    idx = [bank.index_of(u) for u in ranking.order[:k]]
    J = len(bank.sensor_ids)
    total = np.zeros((len(cycles), J))
    count = np.zeros(len(cycles))
    for i in idx:
        tab = bank.cycle_values[i]
        ok = cycles <= int(bank.endpoints[i])
        total[ok] += tab[cycles[ok]]
        count[ok] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        values = total / count[:, None]
    values[count == 0] = np.nan
    return cycles, values


def second_derivative_profile(coefs: np.ndarray, basis: BasisSpec, n_grid: int = 200):
    """Pointwise mean second derivative (registered scale) per sensor.

    ``coefs`` is (m, J, B); returns ``(grid, profile)`` with profile (J, n_grid).
    """
    grid = np.linspace(0.0, 1.0, n_grid)
    D2 = design_matrix(basis, grid, 2)
    mean_coefs = np.asarray(coefs, dtype=float).mean(axis=0)
    return grid, mean_coefs @ D2.T
