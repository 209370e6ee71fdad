"""Two-group structure of first-component scores and its transfer to test engines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

LOW, HIGH = "LOW", "HIGH"
SD_FLOOR = 1e-6


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class Mixture2:
    """Two normals with a shared standard deviation; ``w`` is the weight of the lower one."""

    m1: float
    m2: float
    s: float
    w: float
    log_likelihood: float
    n_iter: int = 0

    def log_joint(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z1, z2 = (x - self.m1) / self.s, (x - self.m2) / self.s
        c = -np.log(self.s) - 0.5 * np.log(2 * np.pi)
        return np.stack([np.log(self.w) + c - 0.5 * z1**2, np.log1p(-self.w) + c - 0.5 * z2**2], -1)

    def responsibilities(self, x) -> np.ndarray:
        lj = self.log_joint(x)
        return np.exp(lj - logsumexp(lj, axis=-1, keepdims=True))

    def pdf(self, x) -> np.ndarray:
        return np.exp(logsumexp(self.log_joint(x), axis=-1))


def _loglik(x, m1, m2, s, w) -> float:
    return float(np.sum(logsumexp(Mixture2(m1, m2, s, w, 0.0).log_joint(x), axis=-1)))


def fit_mixture(scores: Sequence[float], tol: float = 1e-10, max_iter: int = 500) -> Mixture2:
    """EM for a shared-variance two-component normal mixture.

    Starts from the 25th/75th percentiles, the sample sd and equal weights.
    The log-likelihood is checked to be non-decreasing at every step.
    """
    x = np.asarray(scores, dtype=float)
    if x.size < 4:
        raise ClassifyError("mixture fit needs at least 4 scores")
    if np.ptp(x) == 0:
        raise ClassifyError("all scores identical; no mixture to fit")
    m1, m2 = np.percentile(x, [25, 75])
    s = max(float(np.std(x, ddof=1)), SD_FLOOR)
    w = 0.5
    ll = _loglik(x, m1, m2, s, w)
    it = 0
    for it in range(1, max_iter + 1):
        r = Mixture2(m1, m2, s, w, ll).responsibilities(x)
        n1, n2 = r[:, 0].sum(), r[:, 1].sum()
        # keep both components alive
        n1, n2 = max(n1, 1e-300), max(n2, 1e-300)
        m1 = float(r[:, 0] @ x / n1)
        m2 = float(r[:, 1] @ x / n2)
        var = (r[:, 0] @ (x - m1) ** 2 + r[:, 1] @ (x - m2) ** 2) / x.size
        s = max(float(np.sqrt(var)), SD_FLOOR)
        w = float(np.clip(n1 / x.size, 1e-12, 1 - 1e-12))
        new = _loglik(x, m1, m2, s, w)
        if new < ll - 1e-9 * max(1.0, abs(ll)):
            raise ClassifyError(f"EM log-likelihood decreased at iteration {it}: {ll} -> {new}")
        gain, ll = new - ll, new
        if gain < tol:
            break
    if m1 > m2:
        m1, m2, w = m2, m1, 1.0 - w
    if m1 == m2:
        raise ClassifyError("mixture components collapsed onto one mean")
    return Mixture2(m1, m2, s, w, ll, it)


def assign_groups(mix: Mixture2, scores) -> list[str]:
    """HIGH where the upper component's posterior is at least one half."""
    # posterior >= 1/2  <=>  log joint of the upper component is not smaller
    lj = np.atleast_2d(mix.log_joint(np.atleast_1d(np.asarray(scores, dtype=float))))
    return [HIGH if hi >= lo else LOW for lo, hi in lj]


@dataclass(frozen=True)
class Cutoff:
    value: float
    direction: int   # +1: value > cutoff votes HIGH; -1: value <= cutoff votes HIGH
    youden: float

    def vote(self, x: float) -> str:
        above = x > self.value
        return HIGH if above == (self.direction > 0) else LOW


def youden_j(values, is_high, cutoff: float) -> float:
    """Sensitivity + specificity - 1 for the rule ``value > cutoff`` => HIGH."""
    values, is_high = np.asarray(values, dtype=float), np.asarray(is_high, dtype=bool)
    pred = values > cutoff
    sens = np.mean(pred[is_high])
    spec = np.mean(~pred[~is_high])
    return float(sens + spec - 1.0)


def youden_cutoff(values, labels) -> Cutoff:
    """Cutoff maximising the Youden index over midpoints of the sorted distinct values.

    Ties go to the midpoint nearest the pooled median, then to the smaller one.
    """
    values = np.asarray(values, dtype=float)
    is_high = np.array([lab == HIGH for lab in labels])
    if len(values) != len(is_high):
        raise ClassifyError("values and labels differ in length")
    if is_high.all() or (~is_high).all():
        raise ClassifyError("Youden cutoff needs both groups present")
    u = np.unique(values)
    if len(u) == 1:
        return Cutoff(float(u[0]), 1, 0.0)
    cands = 0.5 * (u[:-1] + u[1:])
    # J for "above => HIGH" at every candidate, via sorted cumulative counts
    order = np.argsort(values, kind="stable")
    v_sorted, h_sorted = values[order], is_high[order]
    n_hi, n_lo = is_high.sum(), (~is_high).sum()
    idx = np.searchsorted(v_sorted, cands, side="right")
    hi_below = np.concatenate([[0], np.cumsum(h_sorted)])[idx]
    lo_below = np.concatenate([[0], np.cumsum(~h_sorted)])[idx]
    j_up = (n_hi - hi_below) / n_hi + lo_below / n_lo - 1.0
    j_all = np.concatenate([j_up, -j_up])
    best = j_all.max()
    tied = np.nonzero(np.isclose(j_all, best, rtol=0, atol=1e-12))[0]
    med = float(np.median(values))
    pick = min(tied, key=lambda i: (abs(cands[i % len(cands)] - med), cands[i % len(cands)], i))
    direction = 1 if pick < len(cands) else -1
    return Cutoff(float(cands[pick % len(cands)]), direction, float(best))


@dataclass(frozen=True, eq=False)
class GroupModel:
    train_labels: tuple[str, ...]
    cutoffs: tuple[Cutoff, ...]
    group_means: dict          # label -> (J,) mean initial values
    spread: np.ndarray         # (J,) pooled sd used to normalise the tie-break distance
    vote_rule: float = 0.5

    def votes(self, initial) -> list[str]:
        return [c.vote(float(x)) for c, x in zip(self.cutoffs, initial)]


def build_group_model(train_initial: np.ndarray, labels: Sequence[str], vote_rule: float = 0.5) -> GroupModel:
    """Per-sensor Youden cutoffs on the training engines' initial values."""
    X = np.asarray(train_initial, dtype=float)
    labels = tuple(labels)
    cutoffs = tuple(youden_cutoff(X[:, j], labels) for j in range(X.shape[1]))
    lab = np.array(labels)
    means = {g: X[lab == g].mean(axis=0) for g in (LOW, HIGH) if np.any(lab == g)}
    spread = X.std(axis=0, ddof=1)
    spread = np.where(spread > 0, spread, 1.0)
    return GroupModel(labels, cutoffs, means, spread, vote_rule)


def classify_test(model: GroupModel, test_initial: Sequence[float]) -> str:
    """Majority vote of the per-sensor cutoffs.

    An exact tie goes to the group whose mean initial vector is nearer in
    sd-normalised Euclidean distance.
    """
    votes = model.votes(test_initial)
    share = votes.count(HIGH) / len(votes)
    if share > model.vote_rule:
        return HIGH
    if share < model.vote_rule:
        return LOW
    x = np.asarray(test_initial, dtype=float)
    d = {g: float(np.linalg.norm((x - m) / model.spread)) for g, m in model.group_means.items()}
    return HIGH if d.get(HIGH, np.inf) <= d.get(LOW, np.inf) else LOW
