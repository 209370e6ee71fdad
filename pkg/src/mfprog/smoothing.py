"""Penalised B-spline smoothing with GCV / leave-one-out selection of lambda."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .basis import BasisSpec, FunctionalCurve, design_matrix, difference_matrix
from .registration import RegisteredSeries

log = logging.getLogger(__name__)

DEFAULT_GRID = tuple(np.logspace(-6, 2, 25))
MAX_CONDITION = 1e12  # on R, i.e. ~1e24 on the normal matrix


class SmoothingError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SmoothingFit:
    lam: float
    gcv: float
    hat_trace: float
    residual_mse: float
    loocv: float = math.nan


class PenalizedSystem:
    """Penalised least squares for one set of sample points, shared by many responses.

    Every sensor of an engine is observed at the same registered times, so
    the design is built once per engine. Solves go through a QR factorisation
    of the stacked matrix ``[Phi; sqrt(lam) D]``, which stays accurate for
    very large lambda where the normal equations would not.
    """

    def __init__(self, v, spec: BasisSpec, diff: np.ndarray | None = None):
        self.spec = spec
        self.Phi = design_matrix(spec, v)
        self.D = difference_matrix(spec) if diff is None else diff

    @property
    def n_obs(self) -> int:
        return self.Phi.shape[0]

    def _factor(self, lam: float):
        X = np.vstack([self.Phi, math.sqrt(lam) * self.D])
        Q, R = np.linalg.qr(X)
        cond = np.linalg.cond(R)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise SmoothingError(
                f"penalised normal matrix is singular at lambda={lam:g} "
                f"(condition ~{cond**2:.3g})"
            )
        return Q[: self.n_obs], R

    def solve(self, Y: np.ndarray, lam: float, with_loocv: bool = False):
        """Coefficients and fit statistics for the columns of ``Y``.

        Returns ``(C, rss, hat_trace, loocv)`` where ``C`` has one column of
        coefficients per response and ``loocv`` is None unless requested.
        """
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        Q1, R = self._factor(lam)
        C = scipy.linalg.solve_triangular(R, Q1.T @ Y)
        resid = Y - self.Phi @ C
        rss = np.einsum("ij,ij->j", resid, resid)
        # H = Q1 Q1^T
        h = np.einsum("ij,ij->i", Q1, Q1)
        tr = float(h.sum())
        cv = None
        if with_loocv:
            with np.errstate(divide="ignore", invalid="ignore"):
                loo = resid / (1.0 - h)[:, None]
            cv = np.sqrt(np.sum(loo**2, axis=0) / self.n_obs)
        return C, rss, tr, cv


def gcv_score(rss, n_obs: int, hat_trace: float):
    # count * MSE / trace(I - H)^2
    dof = n_obs - hat_trace
    mse = np.asarray(rss) / n_obs
    if dof <= 1e-12:
        return np.full_like(mse, np.inf, dtype=float)
    return n_obs * mse / dof**2


def fit_curve(v, y, spec: BasisSpec, lam: float) -> tuple[FunctionalCurve, SmoothingFit]:
    """Penalised least-squares fit of one curve at a fixed lambda."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    system = PenalizedSystem(v, spec)
    C, rss, tr, cv = system.solve(np.asarray(y, dtype=float), lam, with_loocv=True)
    n = system.n_obs
    fit = SmoothingFit(
        lam=float(lam),
        gcv=float(gcv_score(rss, n, tr)[0]),
        hat_trace=tr,
        residual_mse=float(rss[0] / n),
        loocv=float(cv[0]),
    )
    return FunctionalCurve(spec, C[:, 0]), fit


def gcv_profile(v, y, spec: BasisSpec, lambdas: Sequence[float]) -> list[SmoothingFit]:
    if len(lambdas) == 0:
        raise ValueError("empty lambda grid")
    if min(lambdas) < 0:
        raise ValueError("lambda values must be >= 0")
    system = PenalizedSystem(v, spec)
    y = np.asarray(y, dtype=float)
    out = []
    for lam in lambdas:
        _, rss, tr, cv = system.solve(y, lam, with_loocv=True)
        out.append(SmoothingFit(float(lam), float(gcv_score(rss, system.n_obs, tr)[0]), tr,
                                float(rss[0] / system.n_obs), float(cv[0])))
    return out


def argmin_prefer_larger(grid: Sequence[float], scores: Sequence[float], rtol: float = 1e-12) -> int:
    """Index of the minimum score; ties go to the larger grid value."""
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    if not finite.any():
        raise SmoothingError("no finite criterion value on the grid")
    best = np.min(scores[finite])
    tied = np.nonzero(finite & (scores <= best + rtol * abs(best)))[0]
    return int(max(tied, key=lambda i: grid[i]))


@dataclass(frozen=True)
class LambdaSelection:
    lam: float
    grid: tuple[float, ...]
    mean_score: tuple[float, ...]   # nan where lambda was skipped
    selector: str
    n_curves: int


def select_global_lambda(
    sample: Sequence[RegisteredSeries],
    spec: BasisSpec,
    grid: Sequence[float] = DEFAULT_GRID,
    selector: str = "gcv",
) -> LambdaSelection:
    """One smoothing parameter for the whole sample, minimising the mean criterion.

    A lambda at which any curve cannot be fitted is skipped.
    """
    if not sample:
        raise ValueError("empty sample")
    if selector not in ("gcv", "loocv"):
        raise ValueError(f"unknown selector {selector!r}")
    grid = tuple(float(g) for g in grid)
    per_lambda: list[list[float]] = [[] for _ in grid]
    failed = [False] * len(grid)
    diff = difference_matrix(spec)
    for reg in sample:
        system = PenalizedSystem(reg.v, spec, diff)
        for i, lam in enumerate(grid):
            if failed[i]:
                continue
            try:
                _, rss, tr, cv = system.solve(reg.values, lam, with_loocv=selector == "loocv")
            except (SmoothingError, np.linalg.LinAlgError):
                failed[i] = True
                continue
            crit = gcv_score(rss, system.n_obs, tr) if selector == "gcv" else cv
            per_lambda[i].extend(float(c) for c in crit)

    n_curves = sum(r.values.shape[1] for r in sample)
    means = []
    for i in range(len(grid)):
        if failed[i]:
            means.append(math.nan)
        else:
            # fsum keeps the reduction independent of any chunking
            means.append(math.fsum(per_lambda[i]) / n_curves)
    if all(failed):
        raise SmoothingError("every lambda on the grid failed")
    k = argmin_prefer_larger(grid, [m if np.isfinite(m) else np.inf for m in means])
    log.info("selected lambda=%g (%s=%.6g over %d curves)", grid[k], selector, means[k], n_curves)
    return LambdaSelection(grid[k], grid, tuple(means), selector, n_curves)


def select_basis_and_lambda(
    sample: Sequence[RegisteredSeries],
    knot_counts: Sequence[int],
    grid: Sequence[float] = DEFAULT_GRID,
    degree: int = 3,
    penalty_order: int = 2,
    selector: str = "gcv",
) -> tuple[BasisSpec, LambdaSelection]:
    """Joint search over interior-knot counts and lambda by the same mean criterion."""
    best = None
    for nk in knot_counts:
        spec = BasisSpec(degree, nk, penalty_order)
        sel = select_global_lambda(sample, spec, grid, selector)
        score = sel.mean_score[sel.grid.index(sel.lam)]
        if best is None or score < best[0]:
            best = (score, spec, sel)
    if best is None:
        raise ValueError("no knot counts given")
    return best[1], best[2]


def smooth_registered(reg: RegisteredSeries, spec: BasisSpec, lam: float) -> np.ndarray:
    """Coefficients for every sensor of one engine, shape ``(J, B)``."""
    C, _, _, _ = PenalizedSystem(reg.v, spec).solve(reg.values, lam)
    return C.T.copy()
