"""B-spline bases on [0, 1] via the Cox-de Boor recursion.

All curves in a study share one :class:`BasisSpec`, so a curve is just a
coefficient vector and inner products between curves reduce to the basis
Gram matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

_DOMAIN_SLACK = 1e-12


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BasisSpec:
    """Clamped B-spline basis with equally spaced interior knots on [0, 1].

    Parameters
    ----------
    degree : int
        Polynomial degree (3 = cubic, order 4).
    n_interior : int
        Number of interior knots. The basis dimension is
        ``n_interior + degree + 1``.
    penalty_order : int
        Order of the coefficient difference penalty.
    """

    degree: int = 3
    n_interior: int = 19
    penalty_order: int = 2

    def __post_init__(self):
        if self.degree < 0 or self.n_interior < 0 or self.penalty_order < 0:
            raise ValueError("degree, n_interior and penalty_order must be non-negative")

    @cached_property
    def knots(self) -> np.ndarray:
        inner = np.linspace(0.0, 1.0, self.n_interior + 2)[1:-1]
        p = self.degree
        return np.concatenate([np.zeros(p + 1), inner, np.ones(p + 1)])

    @property
    def n_basis(self) -> int:
        # m + 1 knots, B = m - n - 1
        return len(self.knots) - self.degree - 1

    @cached_property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)


def _check_domain(t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < -_DOMAIN_SLACK) or np.any(t > 1 + _DOMAIN_SLACK) or np.any(~np.isfinite(t)):
        bad = t[(t < -_DOMAIN_SLACK) | (t > 1 + _DOMAIN_SLACK) | ~np.isfinite(t)][0]
        raise DomainError(f"t={bad!r} outside [0, 1]")
    return np.clip(t, 0.0, 1.0)


def _ratio(num, den):
    # 0/0 terms of the recursion are defined as 0
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def cox_de_boor(knots: np.ndarray, t: np.ndarray, degree: int) -> np.ndarray:
    """All degree-``degree`` B-splines on ``knots`` at points ``t``.

    Returns an array of shape ``(len(t), len(knots) - degree - 1)``. The
    degree-0 indicators use half-open intervals, except that the right end
    of the domain belongs to the last non-empty interval so the basis is a
    partition of unity on the closed domain.
    """
    knots = np.asarray(knots, dtype=float)
    t = np.asarray(t, dtype=float)[:, None]
    lo, hi = knots[:-1], knots[1:]
    N = ((t >= lo) & (t < hi)).astype(float)
    last = np.nonzero(hi > lo)[0][-1]
    at_end = t[:, 0] >= knots[-1]
    N[at_end, :] = 0.0
    N[at_end, last] = 1.0

    for p in range(1, degree + 1):
        nb = len(knots) - p - 1
        k = np.arange(nb)
        left = _ratio(t - knots[k], knots[k + p] - knots[k])
        right = _ratio(knots[k + p + 1] - t, knots[k + p + 1] - knots[k + 1])
        N = left * N[:, :nb] + right * N[:, 1 : nb + 1]
    return N


def design_matrix(spec: BasisSpec, t, d: int = 0) -> np.ndarray:
    """Matrix of ``B_k^{(d)}(t_i)``, shape ``(len(t), n_basis)``."""
    if d < 0:
        raise ValueError("derivative order must be >= 0")
    t = _check_domain(t)
    n = spec.degree
    knots = spec.knots
    if d > n:
        return np.zeros((len(t), spec.n_basis))
    M = cox_de_boor(knots, t, n - d)
    # raise back to degree n, differentiating once per step
    for p in range(n - d + 1, n + 1):
        nb = len(knots) - p - 1
        k = np.arange(nb)
        a = _ratio(p, knots[k + p] - knots[k])
        b = _ratio(p, knots[k + p + 1] - knots[k + 1])
        M = a * M[:, :nb] - b * M[:, 1 : nb + 1]
    return M


def basis_eval(spec: BasisSpec, t: float, d: int = 0) -> np.ndarray:
    """Vector of the ``n_basis`` basis values (or derivatives) at a single t."""
    return design_matrix(spec, [t], d)[0]


def greville(spec: BasisSpec) -> np.ndarray:
    """Knot averages; a spline with coefficients ``a + b*greville`` is the line ``a + b*t``."""
    t, n = spec.knots, spec.degree
    if n == 0:
        return 0.5 * (t[:-1] + t[1:])
    return np.array([t[k + 1 : k + n + 1].mean() for k in range(spec.n_basis)])


def difference_matrix(spec: BasisSpec, order: int | None = None) -> np.ndarray:
    """Order-d differences of the coefficients, taken over the Greville abscissae.

    Scaled so that equally spaced abscissae give the usual integer stencil
    (1, -2, 1 for d = 2). The clamped end knots make the abscissae uneven
    near 0 and 1; dividing by their spacing keeps polynomials of degree < d
    in the null space, so a huge lambda still yields the least-squares
    polynomial rather than a distorted one.
    """
    d = spec.penalty_order if order is None else order
    B = spec.n_basis
    g = greville(spec)
    h = 1.0 / (B - 1) if B > 1 else 1.0
    D = np.eye(B)
    for j in range(1, d + 1):
        span = (g[j:] - g[:-j]) / (j * h)
        D = (D[1:] - D[:-1]) / span[:, None]
    return D


def build_penalty(spec: BasisSpec) -> np.ndarray:
    """Discrete roughness penalty ``D^T D`` on coefficient differences."""
    B, d = spec.n_basis, spec.penalty_order
    if d >= B:
        raise ValueError(f"penalty order {d} must be below the basis dimension {B}")
    D = difference_matrix(spec)
    return D.T @ D


def quadrature(spec: BasisSpec, points_per_interval: int | None = None):
    """Gauss-Legendre nodes and weights on each knot interval of [0, 1].

    The default rule is exact for products of two degree-n splines.
    """
    if points_per_interval is None:
        points_per_interval = spec.degree + 1
    x, w = np.polynomial.legendre.leggauss(points_per_interval)
    bp = spec.breakpoints
    a, b = bp[:-1, None], bp[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def gram_matrix(spec: BasisSpec, d: int = 0) -> np.ndarray:
    """``W[a, b] = integral of phi_a^{(d)} phi_b^{(d)}`` over [0, 1]."""
    nodes, weights = quadrature(spec)
    Phi = design_matrix(spec, nodes, d)
    return (Phi * weights[:, None]).T @ Phi


@dataclass(frozen=True, eq=False)
class FunctionalCurve:
    basis: BasisSpec
    coef: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=float)
        if c.shape != (self.basis.n_basis,):
            raise ValueError(f"expected {self.basis.n_basis} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coef", c)

    def __call__(self, t, d: int = 0):
        return eval_curve(self, t, d)

    def __add__(self, other: "FunctionalCurve") -> "FunctionalCurve":
        _same_basis(self, other)
        return FunctionalCurve(self.basis, self.coef + other.coef)

    def __sub__(self, other: "FunctionalCurve") -> "FunctionalCurve":
        _same_basis(self, other)
        return FunctionalCurve(self.basis, self.coef - other.coef)

    def scaled(self, a: float) -> "FunctionalCurve":
        return FunctionalCurve(self.basis, a * self.coef)


def _same_basis(a: FunctionalCurve, b: FunctionalCurve) -> None:
    if a.basis != b.basis:
        raise ValueError("curves live in different bases")


def eval_curve(curve: FunctionalCurve, t, d: int = 0):
    """Evaluate ``sum_b c_b B_b^{(d)}(t)``; scalar in, scalar out."""
    scalar = np.ndim(t) == 0
    vals = design_matrix(curve.basis, t, d) @ curve.coef
    return float(vals[0]) if scalar else vals
