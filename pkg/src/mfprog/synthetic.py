"""Synthetic run-to-failure fleets in the C-MAPSS text layout.

Used by the tests and scripts when the public FD001 files are not at hand.
The generator mimics the structure that matters for the pipeline: the same
21 channels with constant, binary and coarsely quantised ones, two channels
whose trend direction differs between engines, and two sub-populations of
initial wear with different lifetimes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import RawEngineSeries, write_unit_file

# name: (baseline, resolution, noise sd, shift at failure, kind)
CHANNELS = {
    "T2": (518.67, 0.01, 0.0, 0.0, "flat"),
    "T24": (642.2, 0.01, 0.35, 1.6, "trend"),
    "T30": (1588.0, 0.01, 4.5, 14.0, "trend"),
    "T50": (1404.0, 0.01, 6.0, 26.0, "trend"),
    "P2": (14.62, 0.01, 0.0, 0.0, "flat"),
    "P15": (21.605, 0.01, 0.003, 0.0, "flat"),
    "P30": (553.6, 0.01, 0.6, -4.0, "trend"),
    "Nf": (2388.05, 0.01, 0.05, 0.2, "trend"),
    "Nc": (9050.0, 0.01, 6.0, 25.0, "mixed"),
    "epr": (1.3, 0.01, 0.0, 0.0, "flat"),
    "Ps30": (47.45, 0.01, 0.2, 1.8, "trend"),
    "phi": (521.8, 0.01, 0.5, -4.0, "trend"),
    "NRf": (2388.05, 0.01, 0.05, 0.2, "trend"),
    "NRc": (8140.0, 0.01, 6.0, 25.0, "mixed"),
    "BPR": (8.42, 0.0001, 0.03, 0.2, "trend"),
    "farB": (0.03, 0.0001, 0.0, 0.0, "flat"),
    "htBleed": (392.0, 1.0, 1.0, 5.0, "trend"),
    "Nf_dmd": (2388.0, 1.0, 0.0, 0.0, "flat"),
    "PCNfR_dmd": (100.0, 0.01, 0.0, 0.0, "flat"),
    "W31": (38.85, 0.01, 0.15, -1.0, "trend"),
    "W32": (23.31, 0.0001, 0.09, -0.6, "trend"),
}


@dataclass(frozen=True)
class FleetSpec:
    n_train: int = 100
    n_test: int = 100
    worn_share: float = 0.63       # share of engines starting with more wear
    worn_life: tuple = (185.0, 25.0)
    fresh_life: tuple = (250.0, 35.0)
    life_bounds: tuple = (128, 362)
    wear_offset: float = 0.25      # initial offset as a share of the failure shift
    min_observed: int = 31
    observed_share: tuple = (0.15, 0.95)


def _engine(rng, unit_id: int, T: int, worn: bool, spec: FleetSpec) -> RawEngineSeries:
    v = np.arange(1, T + 1) / T
    wear = rng.normal(1.0 if worn else -1.0, 0.25)
    shape = rng.uniform(2.5, 4.0)
    severity = rng.normal(1.0, 0.08)
    deg = severity * v**shape
    sensors = np.empty((T, 21))
    for j, (base, res, sd, shift, kind) in enumerate(CHANNELS.values()):
        if kind == "flat":
            x = base + sd * rng.normal(size=T)
        elif kind == "mixed":
            x = base + rng.choice([-1.0, 1.0]) * shift * deg + sd * rng.normal(size=T)
        else:
            x = base + shift * (spec.wear_offset * wear + deg) + sd * rng.normal(size=T)
        sensors[:, j] = np.round(np.round(x / res) * res, 6)
    ops = np.column_stack([
        np.round(rng.normal(0, 0.002, T), 4),
        np.round(rng.normal(0, 0.0003, T), 4),
        np.full(T, 100.0),
    ])
    return RawEngineSeries(unit_id, np.arange(1, T + 1), ops, sensors)


def _life(rng, worn: bool, spec: FleetSpec) -> int:
    mu, sd = spec.worn_life if worn else spec.fresh_life
    lo, hi = spec.life_bounds
    return int(np.clip(round(rng.normal(mu, sd)), lo, hi))


def make_fleet(spec: FleetSpec = FleetSpec(), seed: int = 0):
    """Return ``(train, test, true_rul)``; test engines are cut before failure."""
    rng = np.random.default_rng(seed)
    train = []
    for u in range(1, spec.n_train + 1):
        worn = rng.random() < spec.worn_share
        train.append(_engine(rng, u, _life(rng, worn, spec), worn, spec))
    test, rul = [], []
    for u in range(1, spec.n_test + 1):
        worn = rng.random() < spec.worn_share
        T = _life(rng, worn, spec)
        full = _engine(rng, u, T, worn, spec)
        lo, hi = spec.observed_share
        obs = int(np.clip(np.floor(rng.uniform(lo, hi) * T), spec.min_observed, T - 1))
        test.append(RawEngineSeries(u, full.cycles[:obs], full.op_settings[:obs], full.sensors[:obs]))
        rul.append(T - obs)
    return train, test, rul


def write_fleet(directory: str | Path, tag: str = "SYN", spec: FleetSpec = FleetSpec(), seed: int = 0):
    """Write ``train_<tag>.txt``, ``test_<tag>.txt`` and ``RUL_<tag>.txt``; return their paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    train, test, rul = make_fleet(spec, seed)
    paths = d / f"train_{tag}.txt", d / f"test_{tag}.txt", d / f"RUL_{tag}.txt"
    write_unit_file(train, paths[0])
    write_unit_file(test, paths[1])
    paths[2].write_text("".join(f"{r}\n" for r in rul))
    return paths
