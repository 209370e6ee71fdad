"""Multivariate functional PCA on curves sharing one B-spline basis.

With a common basis, the covariance operator acting on J-tuples of curves is
represented exactly by coefficient covariances and the block-diagonal Gram
matrix ``W`` of basis inner products. Its eigenproblem becomes the symmetric
matrix eigenproblem of ``W^{1/2} S W^{1/2}``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import BasisSpec, FunctionalCurve, design_matrix, gram_matrix, quadrature

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
# Pointwise-sd scaling is not a spline operation; it is projected back onto
# the basis with a richer rule than the exact-Gram one.
_SCALE_QUAD_POINTS = 8


class MfpcaError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class MultivariateFunctionalSample:
    basis: BasisSpec
    sensor_ids: tuple[int, ...]
    unit_ids: tuple[int, ...]
    endpoints: np.ndarray  # (n,) failure or censoring cycle of each engine
    coefs: np.ndarray      # (n, J, B)

    def __post_init__(self):
        n, J, B = self.coefs.shape
        if n < 2:
            raise ValueError("MFPCA needs at least two engines")
        if J != len(self.sensor_ids) or B != self.basis.n_basis:
            raise ValueError(f"coefficient array {self.coefs.shape} does not match sensors/basis")
        if len(self.unit_ids) != n or len(self.endpoints) != n:
            raise ValueError("unit_ids / endpoints not aligned with coefficients")

    @property
    def n(self) -> int:
        return self.coefs.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.coefs.shape[1]

    def curve(self, i: int, j: int) -> FunctionalCurve:
        return FunctionalCurve(self.basis, self.coefs[i, j])

    def subset(self, idx: Sequence[int]) -> "MultivariateFunctionalSample":
        idx = list(idx)
        return MultivariateFunctionalSample(
            self.basis, self.sensor_ids, tuple(self.unit_ids[i] for i in idx),
            np.asarray(self.endpoints)[idx], self.coefs[idx],
        )


def _sym_sqrt(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(W)
    if w.min() <= 0:
        raise MfpcaError(f"Gram matrix is not positive definite (min eigenvalue {w.min():.3g})")
    return (V * np.sqrt(w)) @ V.T, (V / np.sqrt(w)) @ V.T


@dataclass(frozen=True, eq=False)
class MfpcaModel:
    basis: BasisSpec
    sensor_ids: tuple[int, ...]
    unit_ids: tuple[int, ...]
    mean_coefs: np.ndarray     # (J, B)
    eigenvalues: np.ndarray    # (r,) all non-trivial eigenvalues, non-increasing
    eigen_coefs: np.ndarray    # (q, J, B) retained eigenfunctions
    train_scores: np.ndarray   # (n, q)
    gram: np.ndarray           # (B, B)
    scaling: str = "none"
    scale_nodes: np.ndarray | None = None  # (J, n_nodes) pointwise sd when scaling

    @property
    def n_components(self) -> int:
        return self.eigen_coefs.shape[0]

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_ids)

    @property
    def total_variance(self) -> float:
        return float(np.sum(self.eigenvalues))

    def mean_curves(self) -> list[FunctionalCurve]:
        return [FunctionalCurve(self.basis, c) for c in self.mean_coefs]

    def eigenfunction(self, k: int) -> list[FunctionalCurve]:
        return [FunctionalCurve(self.basis, c) for c in self.eigen_coefs[k]]

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Multivariate L2 inner product of two (J, B) coefficient blocks."""
        return float(np.einsum("jb,bc,jc->", a, self.gram, b))


# -- scaling helpers ---------------------------------------------------------

def _scale_rule(basis: BasisSpec):
    nodes, weights = quadrature(basis, _SCALE_QUAD_POINTS)
    return nodes, weights, design_matrix(basis, nodes)


def _project(basis: BasisSpec, gram: np.ndarray, values: np.ndarray) -> np.ndarray:
    """L2 projection of functions sampled on the scale rule nodes; values (..., n_nodes)."""
    _, weights, Phi = _scale_rule(basis)
    rhs = (values * weights) @ Phi
    return np.linalg.solve(gram, rhs.reshape(-1, basis.n_basis).T).T.reshape(rhs.shape)


def _standardize(basis, gram, centered: np.ndarray, sd_nodes: np.ndarray) -> np.ndarray:
    _, _, Phi = _scale_rule(basis)
    return _project(basis, gram, (centered @ Phi.T) / sd_nodes)


def _unstandardize(basis, gram, z: np.ndarray, sd_nodes: np.ndarray) -> np.ndarray:
    _, _, Phi = _scale_rule(basis)
    return _project(basis, gram, (z @ Phi.T) * sd_nodes)


# -- fitting -----------------------------------------------------------------

def _choose_q(ratios: np.ndarray, q, rank: int) -> int:
    if q is None:
        q = 0.995
    if isinstance(q, float) and 0 < q <= 1:
        k = int(np.searchsorted(np.cumsum(ratios), q - 1e-12) + 1)
        return max(min(k, rank), min(2, rank))
    q = int(q)
    if q < 1:
        raise ValueError("need at least one component")
    if q > rank:
        warnings.warn(f"requested {q} components but the sample has rank {rank}; truncating")
        q = rank
    return q


def fit(
    sample: MultivariateFunctionalSample,
    q: int | float | None = None,
    scaling: str = "none",
    orient_by: Sequence[float] | None = None,
) -> MfpcaModel:
    """Fit MFPCA.

    Parameters
    ----------
    q : int, float or None
        Number of components to keep, or a cumulative explained-variance
        target in (0, 1]. None keeps the smallest count reaching 99.5 %
        (at least two).
    scaling : {"none", "pointwise"}
        "pointwise" divides each centred sensor curve by that sensor's
        pointwise standard deviation before the decomposition.
    orient_by : sequence of float, optional
        Per-engine covariate (e.g. lifetime); each component's sign is chosen
        so its scores correlate non-negatively with it. Without it, the
        largest-magnitude loading of each eigenvector is made positive.
    """
    if scaling not in ("none", "pointwise"):
        raise ValueError(f"unknown scaling {scaling!r}")
    basis = sample.basis
    n, J, B = sample.coefs.shape
    W = gram_matrix(basis)
    Wh, Whi = _sym_sqrt(W)

    mean = sample.coefs.mean(axis=0)
    Z = sample.coefs - mean
    sd_nodes = None
    if scaling == "pointwise":
        _, _, Phi = _scale_rule(basis)
        vals = Z @ Phi.T
        sd_nodes = np.sqrt(np.sum(vals**2, axis=0) / (n - 1))
        sd_nodes = np.maximum(sd_nodes, 1e-12 * max(sd_nodes.max(), 1e-300))
        Z = _project(basis, W, vals / sd_nodes)
        Z = Z - Z.mean(axis=0)

    Zw = np.einsum("njb,bc->njc", Z, Wh).reshape(n, J * B)
    M = Zw.T @ Zw / (n - 1)
    M = 0.5 * (M + M.T)
    evals, U = np.linalg.eigh(M)
    order = np.argsort(evals)[::-1]
    evals, U = evals[order], U[:, order]
    resid = np.linalg.norm(M @ U - U * evals, axis=0).max()
    if resid > 1e-9 * max(np.linalg.norm(M, 2), 1e-300):
        raise MfpcaError(f"eigendecomposition residual {resid:.3g} too large")
    if evals.min() < -1e-8 * max(evals.max(), 1e-300):
        log.warning("clamping negative eigenvalue %.3g", evals.min())
    evals = np.clip(evals, 0.0, None)

    rank = int(min(n - 1, J * B))
    evals = evals[:rank]
    total = evals.sum()
    ratios = evals / total if total > 0 else np.zeros_like(evals)
    nq = _choose_q(ratios, q, rank)
    U = U[:, :nq]

    scores = Zw @ U
    for k in range(nq):
        flip = False
        if orient_by is not None:
            c = np.corrcoef(scores[:, k], np.asarray(orient_by, dtype=float))[0, 1]
            flip = bool(np.isfinite(c) and c < 0)
        else:
            flip = U[np.argmax(np.abs(U[:, k])), k] < 0
        if flip:
            U[:, k] *= -1
            scores[:, k] *= -1

    eig_coefs = np.einsum("bc,kjc->kjb", Whi, U.T.reshape(nq, J, B))
    return MfpcaModel(
        basis=basis,
        sensor_ids=tuple(sample.sensor_ids),
        unit_ids=tuple(sample.unit_ids),
        mean_coefs=mean,
        eigenvalues=evals,
        eigen_coefs=eig_coefs,
        train_scores=scores,
        gram=W,
        scaling=scaling,
        scale_nodes=sd_nodes,
    )


def _as_coefs(model: MfpcaModel, engine) -> np.ndarray:
    if isinstance(engine, np.ndarray):
        c = engine
    else:
        curves = list(engine)
        if any(cv.basis != model.basis for cv in curves):
            raise ValueError("curve basis does not match the model basis")
        c = np.array([cv.coef for cv in curves])
    if c.shape != model.mean_coefs.shape:
        raise ValueError(f"expected coefficients of shape {model.mean_coefs.shape}, got {c.shape}")
    return c


def score(model: MfpcaModel, engine) -> np.ndarray:
    """Scores of one engine (J curves or a (J, B) coefficient array)."""
    c = _as_coefs(model, engine) - model.mean_coefs
    if model.scaling == "pointwise":
        c = _standardize(model.basis, model.gram, c, model.scale_nodes)
    return np.einsum("jb,bc,kjc->k", c, model.gram, model.eigen_coefs)


def reconstruct_coefs(model: MfpcaModel, scores: Sequence[float]) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or len(s) > model.n_components:
        raise ValueError(f"at most {model.n_components} scores available, got {s.shape}")
    dev = np.einsum("k,kjb->jb", s, model.eigen_coefs[: len(s)])
    if model.scaling == "pointwise":
        dev = _unstandardize(model.basis, model.gram, dev, model.scale_nodes)
    return model.mean_coefs + dev


def reconstruct(model: MfpcaModel, scores: Sequence[float]) -> list[FunctionalCurve]:
    """Truncated Karhunen-Loeve reconstruction from the first ``len(scores)`` components."""
    return [FunctionalCurve(model.basis, c) for c in reconstruct_coefs(model, scores)]


def explained_variance(model: MfpcaModel) -> list[tuple[float, float, float]]:
    """(eigenvalue, proportion, cumulative proportion) per component."""
    total = model.total_variance
    out, cum = [], 0.0
    for lam in model.eigenvalues:
        r = lam / total if total > 0 else 0.0
        cum += r
        out.append((float(lam), float(r), float(min(cum, 1.0))))
    return out


# -- serialization -------------------------------------------------------------

def _row(xs) -> str:
    return " ".join(repr(float(x)) for x in np.ravel(xs))


def save_model(model: MfpcaModel, path: str | Path) -> None:
    """Write the model as versioned plain text (floats via repr, so reloads are exact)."""
    J, B = model.mean_coefs.shape
    q = model.n_components
    lines = [
        f"# mfprog-mfpca {FORMAT_VERSION}",
        f"degree {model.basis.degree}",
        f"n_interior {model.basis.n_interior}",
        f"penalty_order {model.basis.penalty_order}",
        f"sensor_ids {' '.join(map(str, model.sensor_ids))}",
        f"unit_ids {' '.join(map(str, model.unit_ids))}",
        f"scaling {model.scaling}",
        f"n_components {q}",
        f"eigenvalues {_row(model.eigenvalues)}",
        "mean",
        *(_row(model.mean_coefs[j]) for j in range(J)),
        "eigenfunctions",
        *(_row(model.eigen_coefs[k, j]) for k in range(q) for j in range(J)),
        "scores",
        *(_row(r) for r in model.train_scores),
    ]
    if model.scaling == "pointwise":
        lines += ["scale_nodes", *(_row(r) for r in model.scale_nodes)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path: str | Path) -> MfpcaModel:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# mfprog-mfpca"):
        raise ValueError(f"{path}: not an mfprog MFPCA model file")
    version = int(lines[0].split()[2])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format version {version}")
    head, pos = {}, 1
    while lines[pos] != "mean":
        key, _, rest = lines[pos].partition(" ")
        head[key] = rest
        pos += 1
    basis = BasisSpec(int(head["degree"]), int(head["n_interior"]), int(head["penalty_order"]))
    sensor_ids = tuple(int(x) for x in head["sensor_ids"].split())
    unit_ids = tuple(int(x) for x in head["unit_ids"].split())
    q = int(head["n_components"])
    J, n = len(sensor_ids), len(unit_ids)

    def block(label, rows):
        nonlocal pos
        if lines[pos] != label:
            raise ValueError(f"{path}: expected section {label!r}, found {lines[pos]!r}")
        data = np.array([[float(x) for x in lines[pos + 1 + r].split()] for r in range(rows)])
        pos += rows + 1
        return data

    mean = block("mean", J)
    eig = block("eigenfunctions", q * J).reshape(q, J, basis.n_basis)
    scores = block("scores", n).reshape(n, q)
    sd = block("scale_nodes", J) if head["scaling"] == "pointwise" else None
    return MfpcaModel(
        basis, sensor_ids, unit_ids, mean,
        np.array([float(x) for x in head["eigenvalues"].split()]),
        eig, scores, gram_matrix(basis), head["scaling"], sd,
    )
