"""Slow, direct reference implementations used only to check the library."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.interpolate import BSpline


def bspline_recursive(knots, i, p, t):
    """Textbook Cox-de Boor recursion for one basis function at one point."""
    if p == 0:
        last = knots[-1]
        if knots[i] <= t < knots[i + 1]:
            return 1.0
        # the right end of the domain belongs to the last non-empty interval
        if t == last and knots[i] < knots[i + 1] == last:
            return 1.0
        return 0.0
    left = right = 0.0
    if knots[i + p] > knots[i]:
        left = (t - knots[i]) / (knots[i + p] - knots[i]) * bspline_recursive(knots, i, p - 1, t)
    if knots[i + p + 1] > knots[i + 1]:
        right = (knots[i + p + 1] - t) / (knots[i + p + 1] - knots[i + 1]) * bspline_recursive(knots, i + 1, p - 1, t)
    return left + right


def scipy_design(knots, degree, t, d=0):
    n = len(knots) - degree - 1
    out = np.empty((len(t), n))
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        spl = BSpline(knots, c, degree, extrapolate=False)
        if d:
            spl = spl.derivative(d)
        out[:, i] = np.nan_to_num(spl(t))
    return out


def dense_hat(Phi, D, lam):
    A = Phi.T @ Phi + lam * D.T @ D
    return Phi @ np.linalg.solve(A, Phi.T)


def dense_gcv(Phi, D, y, lam):
    H = dense_hat(Phi, D, lam)
    r = y - H @ y
    n = len(y)
    return n * (r @ r / n) / (n - np.trace(H)) ** 2


def simpson_weights(m):
    """Composite Simpson weights on m (odd) equally spaced points of [0, 1]."""
    w = np.ones(m)
    w[1:-1:2], w[2:-1:2] = 4, 2
    return w / (3 * (m - 1))


def dense_mfpca_eigenvalues(values, weights):
    """Nonzero eigenvalues of the covariance operator from curve values on a grid.

    ``values`` is (n, J, G). Uses the n x n dual: K[i, k] = sum_j int x_ij x_kj.
    """
    X = values - values.mean(axis=0)
    K = np.einsum("ijg,kjg,g->ik", X, X, weights) / (len(X) - 1)
    ev = np.linalg.eigvalsh(K)[::-1]
    return ev[: len(X) - 1]


def exhaustive_youden(values, is_high):
    """Best Youden index over every threshold and both directions, by brute force."""
    values, is_high = np.asarray(values, float), np.asarray(is_high, bool)
    u = np.unique(values)
    cands = np.concatenate([u - 1.0, u, 0.5 * (u[:-1] + u[1:]), u + 1.0])
    best = -np.inf
    for c, sgn in itertools.product(cands, (1, -1)):
        pred = values > c if sgn > 0 else values <= c
        tp = sum(1 for p, h in zip(pred, is_high) if p and h)
        tn = sum(1 for p, h in zip(pred, is_high) if not p and not h)
        j = tp / is_high.sum() + tn / (~is_high).sum() - 1
        best = max(best, j)
    return best


def naive_distance(a, b):
    J, G = a.shape
    total = 0.0
    for g in range(G):
        s = 0.0
        for j in range(J):
            s += (a[j, g] - b[j, g]) ** 2
        total += s ** 0.5
    return total / G
