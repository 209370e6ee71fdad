"""Training and prediction on whole fleets, glued from the individual stages."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import mfpca
from .basis import BasisSpec, design_matrix
from .classify import GroupModel, Mixture2, assign_groups, build_group_model, classify_test, fit_mixture
from .config import PipelineConfig
from .ingest import MultiSensorSeries, RawEngineSeries, SensorScreenReport, screen_sensors, select_sensors
from .prognosis import (NeighborRanking, PrognosisError, RulPrediction, TrainingBank, predict_rul,
                        predict_trajectories, rank_neighbors)
from .registration import register
from .smoothing import LambdaSelection, select_basis_and_lambda, select_global_lambda, smooth_registered

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """A stage failed; the message names the stage and the unit involved."""


@dataclass(frozen=True, eq=False)
class FittedPipeline:
    config: PipelineConfig
    screen: SensorScreenReport | None
    sensor_ids: tuple[int, ...]
    basis: BasisSpec
    smoothing: LambdaSelection
    sample: mfpca.MultivariateFunctionalSample
    model: mfpca.MfpcaModel
    mixture: Mixture2
    labels: tuple[str, ...]
    initial: np.ndarray          # (n, J) smoothed values at v = 0
    groups: GroupModel
    bank: TrainingBank
    train_series: dict           # unit id -> MultiSensorSeries


@dataclass(frozen=True, eq=False)
class EnginePrediction:
    unit_id: int
    label: str
    coefs: np.ndarray            # (J, B) on the engine's own registration
    pc1_score: float
    initial: np.ndarray
    votes: tuple[str, ...]
    ranking: NeighborRanking
    rul: RulPrediction


def initial_values(basis: BasisSpec, coefs: np.ndarray) -> np.ndarray:
    """Smoothed value at the start of life for each sensor; ``coefs`` is (..., J, B)."""
    phi0 = design_matrix(basis, np.array([0.0]))[0]
    return np.asarray(coefs) @ phi0


def _stage(name: str, unit=None):
    where = f" (unit {unit})" if unit is not None else ""
    return f"{name}{where}"


def fit_pipeline(train: Sequence[RawEngineSeries], cfg: PipelineConfig = PipelineConfig()) -> FittedPipeline:
    """Screen, smooth, decompose and group the training fleet."""
    if len(train) < 4:
        raise PipelineError("fit: at least 4 training engines are needed")
    screen = None
    sids = cfg.sensor_ids()
    if sids is None:
        screen = screen_sensors(train, cfg.screen())
        sids = screen.informative_ids
        if not sids:
            raise PipelineError("screen: no informative sensors left")
        log.info("screening kept %s", ", ".join(screen.informative_names))
    series = {s.unit_id: select_sensors(s, sids) for s in train}
    regs = [register(s) for s in series.values()]

    grid = cfg.lambda_grid()
    try:
        if cfg.knot_grid:
            basis, sel = select_basis_and_lambda(regs, cfg.knot_grid, grid, cfg.degree,
                                                 cfg.penalty_order, cfg.selector)
        else:
            basis = cfg.basis()
            sel = select_global_lambda(regs, basis, grid, cfg.selector)
    except ArithmeticError as e:
        raise PipelineError(f"smoothing: {e}") from e

    coefs = np.stack([smooth_registered(r, basis, sel.lam) for r in regs])
    uids = tuple(r.unit_id for r in regs)
    ends = np.array([r.endpoint_cycle for r in regs])
    sample = mfpca.MultivariateFunctionalSample(basis, tuple(sids), uids, ends, coefs)
    orient = ends.astype(float) if cfg.orient == "lifetime" else None
    try:
        model = mfpca.fit(sample, q=cfg.q(), scaling=cfg.mfpca_scaling, orient_by=orient)
    except ArithmeticError as e:
        raise PipelineError(f"mfpca: {e}") from e
    log.info("MFPCA kept %d components, first explains %.4f", model.n_components,
             model.eigenvalues[0] / model.total_variance)

    pc1 = model.train_scores[:, 0]
    mix = fit_mixture(pc1)
    labels = tuple(assign_groups(mix, pc1))
    init = initial_values(basis, coefs)
    groups = build_group_model(init, labels, cfg.vote_rule)
    bank = TrainingBank(basis, tuple(sids), uids, ends, labels, coefs)
    return FittedPipeline(cfg, screen, tuple(sids), basis, sel, sample, model, mix, labels,
                          init, groups, bank, series)


def smooth_engine(fp: FittedPipeline, s: MultiSensorSeries) -> np.ndarray:
    """(J, B) coefficients of a partially observed engine on its own registration."""
    return smooth_registered(register(s), fp.basis, fp.smoothing.lam)


def predict_engine(fp: FittedPipeline, s: MultiSensorSeries, k: int | None = None) -> EnginePrediction:
    cfg = fp.config
    try:
        coefs = smooth_engine(fp, s)
    except ArithmeticError as e:
        raise PipelineError(f"{_stage('smoothing', s.unit_id)}: {e}") from e
    init = initial_values(fp.basis, coefs)
    label = classify_test(fp.groups, init)
    try:
        ranking = rank_neighbors(coefs, s.endpoint_cycle, label if cfg.use_groups else None, fp.bank,
                                 scale=cfg.compare_scale, fallback=cfg.group_fallback,
                                 test_unit_id=s.unit_id)
    except PrognosisError as e:
        raise PipelineError(f"prognosis: {e}") from e
    if ranking.group_filter_dropped:
        log.warning("unit %d: no %s engine outlives cycle %d, group filter dropped",
                    s.unit_id, label, s.endpoint_cycle)
    k = cfg.k if k is None else k
    k_eff = min(k, len(ranking.order))
    if k_eff < k:
        log.warning("unit %d: only %d eligible neighbours, using k=%d", s.unit_id, k_eff, k_eff)
    pred = predict_rul(ranking, k_eff, cfg.alarm_fraction)
    horizon = pred.predicted_failure(cfg.aggregate)
    cyc, vals = predict_trajectories(ranking, k_eff, horizon, fp.bank)
    pred = RulPrediction(**{**pred.__dict__, "trajectory_cycles": cyc, "trajectories": vals})
    pc1 = float(mfpca.score(fp.model, coefs)[0])
    return EnginePrediction(s.unit_id, label, coefs, pc1, init, tuple(fp.groups.votes(init)), ranking, pred)


def predict_fleet(fp: FittedPipeline, test: Sequence[RawEngineSeries]) -> list[EnginePrediction]:
    return [predict_engine(fp, select_sensors(s, fp.sensor_ids)) for s in test]


def tail_predictor(fp: FittedPipeline):
    """Callable ``(truncated_series, horizon) -> (cycles, values)`` for curve-RMSE scoring.

    The truncated engine goes through the same smoothing, grouping and
    ranking as any test engine; the prediction covers cycles after the cut.
    """
    cfg = fp.config

    def predict_tail(s: MultiSensorSeries, horizon: int):
        coefs = smooth_engine(fp, s)
        label = classify_test(fp.groups, initial_values(fp.basis, coefs))
        ranking = rank_neighbors(coefs, s.endpoint_cycle, label if cfg.use_groups else None, fp.bank,
                                 scale=cfg.compare_scale, fallback=cfg.group_fallback,
                                 test_unit_id=s.unit_id)
        k = min(cfg.k, len(ranking.order))
        return predict_trajectories(ranking, k, horizon, fp.bank, start=s.endpoint_cycle + 1)

    return predict_tail
