"""Columnar data files behind the figures (curves, eigenfunctions, scores, profiles).

No images are drawn; every file is a CSV with a header row so any plotting
tool can regenerate the pictures.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import mfpca
from .basis import design_matrix
from .classify import HIGH, LOW
from .ingest import sensor_name
from .pipeline import FittedPipeline
from .prognosis import second_derivative_profile

GRID_POINTS = 200


def fmt(x) -> str:
    x = float(x)
    return "nan" if np.isnan(x) else f"{x:.10g}"


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) if isinstance(c, float) else c for c in r])
    return path


def _names(fp: FittedPipeline) -> list[str]:
    return [sensor_name(s) for s in fp.sensor_ids]


def registered_curves(fp: FittedPipeline, path: Path, units=None) -> Path:
    """Raw registered observations next to the smoothed curve at the same points."""
    units = fp.sample.unit_ids if units is None else [u for u in units if u in fp.sample.unit_ids]
    names = _names(fp)
    header = ["unit_id", "v"] + [f"{n}_obs" for n in names] + [f"{n}_fit" for n in names]
    rows = []
    for u in units:
        i = fp.sample.unit_ids.index(u)
        s = fp.train_series[u]
        v = np.arange(1, s.endpoint_cycle + 1) / s.endpoint_cycle
        fit = design_matrix(fp.basis, v) @ fp.sample.coefs[i].T
        for g in range(len(v)):
            rows.append([u, float(v[g])] + [float(x) for x in s.values[g]] + [float(x) for x in fit[g]])
    return _write(path, header, rows)


def eigenfunctions(fp: FittedPipeline, path: Path, n_components: int = 3) -> Path:
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    Phi = design_matrix(fp.basis, grid)
    K = min(n_components, fp.model.n_components)
    names = _names(fp)
    header = ["v"] + [f"pc{k + 1}_{n}" for k in range(K) for n in names]
    cols = [Phi @ fp.model.eigen_coefs[k, j] for k in range(K) for j in range(len(names))]
    rows = [[float(grid[g])] + [float(c[g]) for c in cols] for g in range(len(grid))]
    return _write(path, header, rows)


def score_histogram(fp: FittedPipeline, path: Path) -> Path:
    rows = [[u, float(s), lab] for u, s, lab in zip(fp.sample.unit_ids, fp.model.train_scores[:, 0], fp.labels)]
    return _write(path, ["unit_id", "pc1_score", "group"], rows)


def mixture_density(fp: FittedPipeline, path: Path, n: int = GRID_POINTS) -> Path:
    x = fp.model.train_scores[:, 0]
    pad = 3 * fp.mixture.s
    grid = np.linspace(x.min() - pad, x.max() + pad, n)
    r = fp.mixture.responsibilities(grid)
    dens = fp.mixture.pdf(grid)
    rows = [[float(g), float(d), float(d * a), float(d * b)] for g, d, (a, b) in zip(grid, dens, r)]
    return _write(path, ["score", "density", "density_low", "density_high"], rows)


def group_profiles(fp: FittedPipeline):
    """Mean second derivative per group: ``(grid, {label: (J, G)})``."""
    lab = np.array(fp.labels)
    out, grid = {}, None
    for g in (LOW, HIGH):
        if np.any(lab == g):
            grid, prof = second_derivative_profile(fp.sample.coefs[lab == g], fp.basis, GRID_POINTS)
            out[g] = prof
    return grid, out


def second_derivatives(fp: FittedPipeline, path: Path) -> Path:
    grid, prof = group_profiles(fp)
    names = _names(fp)
    header = ["v"] + [f"{g}_{n}" for g in prof for n in names]
    rows = [[float(grid[i])] + [float(prof[g][j, i]) for g in prof for j in range(len(names))]
            for i in range(len(grid))]
    return _write(path, header, rows)


def kle_reconstruction(fp: FittedPipeline, path: Path, units=None) -> Path:
    """Smoothed curve and its truncated expansion at the kept number of components."""
    units = fp.config.plot_units if units is None else units
    units = [u for u in units if u in fp.sample.unit_ids]
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    Phi = design_matrix(fp.basis, grid)
    names = _names(fp)
    header = ["unit_id", "v"] + [f"{n}_fit" for n in names] + [f"{n}_kle" for n in names]
    rows = []
    for u in units:
        i = fp.sample.unit_ids.index(u)
        rec = mfpca.reconstruct_coefs(fp.model, fp.model.train_scores[i])
        a, b = Phi @ fp.sample.coefs[i].T, Phi @ rec.T
        for g in range(len(grid)):
            rows.append([u, float(grid[g])] + [float(x) for x in a[g]] + [float(x) for x in b[g]])
    return _write(path, header, rows)


def emit_all(fp: FittedPipeline, directory: Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    return [
        registered_curves(fp, d / "registered_curves.csv", fp.config.plot_units),
        eigenfunctions(fp, d / "eigenfunctions.csv"),
        score_histogram(fp, d / "pc1_scores.csv"),
        mixture_density(fp, d / "mixture_density.csv"),
        second_derivatives(fp, d / "second_derivative_profiles.csv"),
        kle_reconstruction(fp, d / "kle_reconstruction.csv"),
    ]
