"""Reproduction checks against the published FD001 results.

Each check takes loaded data, runs the relevant stages with default
settings and returns a :class:`Check` with a one-line verdict. The same
checks run on FD001 in the test suite and on synthetic fleets from
``scripts/acceptance_synthetic.py``.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import fit_mixture
from .config import PipelineConfig
from .evaluation import ALARM_WINDOWS, alarm_eval, rul_eval
from .ingest import FD001_INFORMATIVE, parse_rul_file, parse_unit_file, screen_sensors, sensor_name
from .pipeline import fit_pipeline, predict_fleet
from .plotdata import group_profiles

# published values and the tolerances allowed around them
INFORMATIVE = FD001_INFORMATIVE
SCREEN_SECONDS = 2.0
PC1_RANGE = (0.93, 0.98)
PC12_MIN = 0.99
FIT_SECONDS = 30.0
MIX_MEANS = (-2.874, 4.893)
MIX_MEAN_TOL = 1.5
MIX_SD = 2.649
MIX_SD_TOL = 1.0
MIX_MIN_SEPARATION = 2.0
RMSE_MAX = 28.0
RMSE_TARGET = 25.41
RMSE_BAND = 2.5
ERROR_LIMIT = 80
PIPELINE_SECONDS = 60.0
EARLY_MIN = 90
LAST40_MIN = 85
PEAK_WINDOW = (0.8, 1.0)
PEAK_SENSORS = (2, 21)  # T24, W32


@dataclass(frozen=True)
class Check:
    criterion: int
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.criterion}: {self.detail}"


def fd001_dir() -> Path:
    return Path(os.environ.get("MFPROG_CMAPSS_DIR", "data/CMAPSSData"))


def fd001_paths(directory: Path | None = None) -> dict[str, Path]:
    d = fd001_dir() if directory is None else Path(directory)
    return {"train": d / "train_FD001.txt", "test": d / "test_FD001.txt", "rul": d / "RUL_FD001.txt"}


def missing_fd001(directory: Path | None = None) -> list[Path]:
    return [p for p in fd001_paths(directory).values() if not p.exists()]


def load(paths: dict[str, Path]):
    return parse_unit_file(paths["train"]), parse_unit_file(paths["test"]), parse_rul_file(paths["rul"])


def check_screening(train) -> Check:
    t0 = time.perf_counter()
    rep = screen_sensors(train)
    dt = time.perf_counter() - t0
    ok = rep.informative_ids == INFORMATIVE and dt < SCREEN_SECONDS
    return Check(1, ok, f"informative = {{{', '.join(rep.informative_names)}}} in {dt:.2f}s")


def _fit(train, scaling):
    cfg = PipelineConfig(mfpca_scaling=scaling)
    t0 = time.perf_counter()
    fp = fit_pipeline(train, cfg)
    return fp, time.perf_counter() - t0


def _ratios(fp):
    r = fp.model.eigenvalues / fp.model.total_variance
    return float(r[0]), float(r[:2].sum())


def check_variance(train, fits=None) -> tuple[Check, str | None, dict]:
    """Explained variance under both scaling conventions; returns the matching one."""
    fits = {} if fits is None else fits
    parts, match = [], None
    for scaling in ("none", "pointwise"):
        if scaling not in fits:
            fits[scaling] = _fit(train, scaling)
        fp, dt = fits[scaling]
        r1, r12 = _ratios(fp)
        ok = PC1_RANGE[0] <= r1 <= PC1_RANGE[1] and r12 >= PC12_MIN and dt < FIT_SECONDS
        parts.append(f"{scaling}: pc1={r1:.4f} pc1+2={r12:.4f} fit {dt:.1f}s")
        if ok and match is None:
            match = scaling
    detail = "; ".join(parts) + f"; matching convention = {match or 'none found'}"
    return Check(2, match is not None, detail), match, fits


def _mixture_ok(m) -> bool:
    return (m.m1 < 0 < m.m2 and (m.m2 - m.m1) > MIX_MIN_SEPARATION * m.s
            and abs(m.m1 - MIX_MEANS[0]) <= MIX_MEAN_TOL and abs(m.m2 - MIX_MEANS[1]) <= MIX_MEAN_TOL
            and abs(m.s - MIX_SD) <= MIX_SD_TOL)


def check_mixture(train, match: str | None, fits: dict) -> Check:
    conventions = [match] if match else ["none", "pointwise"]
    parts, ok = [], False
    for scaling in conventions:
        if scaling not in fits:
            fits[scaling] = _fit(train, scaling)
        m = fit_mixture(fits[scaling][0].model.train_scores[:, 0])
        parts.append(f"{scaling}: means {m.m1:.3f} / {m.m2:.3f}, sd {m.s:.3f}")
        ok = ok or _mixture_ok(m)
    suffix = "" if match else " (no variance match, both conventions tried)"
    return Check(3, ok, "; ".join(parts) + suffix)


def run_predictions(train, test, cfg: PipelineConfig | None = None):
    cfg = PipelineConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    fp = fit_pipeline(train, cfg)
    preds = predict_fleet(fp, test)
    return fp, preds, time.perf_counter() - t0


def check_rul(preds, rul, seconds: float) -> Check:
    rep = rul_eval([p.rul.rul_mean for p in preds], rul)
    lo, hi = rep.error_range
    ok = rep.rmse <= RMSE_MAX and -ERROR_LIMIT <= lo and hi <= ERROR_LIMIT and seconds < PIPELINE_SECONDS
    band = abs(rep.rmse - RMSE_TARGET) <= RMSE_BAND
    return Check(4, ok, f"RMSE {rep.rmse:.2f} (target band {'hit' if band else 'missed'}), "
                        f"errors [{lo},{hi}], correct {rep.correct_count}, pipeline {seconds:.1f}s")


def check_alarms(preds, rul) -> Check:
    rep = alarm_eval([p.rul.alarm_cycle for p in preds], [p.rul.observed_cycle + r for p, r in zip(preds, rul)])
    c = [rep.windows[w] for w in ALARM_WINDOWS]
    ok = rep.earlier >= EARLY_MIN and rep.nested and c[0] >= LAST40_MIN
    return Check(5, ok, f"earlier {rep.earlier}, later {rep.later}, last 40/30/20/10/5% = {'/'.join(map(str, c))}")


def check_curvature_peaks(fp) -> Check:
    grid, prof = group_profiles(fp)
    parts, ok = [], True
    for sid in PEAK_SENSORS:
        if sid not in fp.sensor_ids:
            return Check(7, False, f"{sensor_name(sid)} not among the selected sensors")
        j = fp.sensor_ids.index(sid)
        for label, p in prof.items():
            v = float(grid[int(np.argmax(np.abs(p[j])))])
            ok &= PEAK_WINDOW[0] <= v <= PEAK_WINDOW[1]
            parts.append(f"{sensor_name(sid)}/{label} peak at v={v:.3f}")
    return Check(7, bool(ok), ", ".join(parts))


def run_all(train, test, rul) -> list[Check]:
    """Every data-driven check (all but the property suite) on one data set."""
    out = [check_screening(train)]
    c2, match, fits = check_variance(train)
    out += [c2, check_mixture(train, match, fits)]
    fp, preds, dt = run_predictions(train, test)
    out += [check_rul(preds, rul, dt), check_alarms(preds, rul), check_curvature_peaks(fp)]
    return sorted(out, key=lambda c: c.criterion)

