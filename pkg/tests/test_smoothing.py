import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfprog.basis import BasisSpec, DomainError, FunctionalCurve, design_matrix, difference_matrix, greville
from mfprog.ingest import MultiSensorSeries
from mfprog.registration import register, to_registered, unregister_eval
from mfprog.smoothing import (DEFAULT_GRID, PenalizedSystem, SmoothingError, argmin_prefer_larger, fit_curve,
                              gcv_profile, gcv_score, select_basis_and_lambda, select_global_lambda,
                              smooth_registered)
from oracles import dense_gcv, dense_hat

SPEC = BasisSpec()


def noisy(rng, T=150, sd=0.2):
    v = np.arange(1, T + 1) / T
    return v, np.sin(3 * v) + 2 * v**4 + sd * rng.normal(size=T)


def test_default_grid():
    assert len(DEFAULT_GRID) == 25
    assert DEFAULT_GRID[0] == pytest.approx(1e-6) and DEFAULT_GRID[-1] == pytest.approx(1e2)


def test_hat_trace_matches_dense(rng):
    v, y = noisy(rng)
    Phi, D = design_matrix(SPEC, v), difference_matrix(SPEC)
    for lam in (1e-6, 1e-2, 10.0):
        _, fit = fit_curve(v, y, SPEC, lam)
        assert fit.hat_trace == pytest.approx(np.trace(dense_hat(Phi, D, lam)), rel=1e-8)
        assert fit.gcv == pytest.approx(dense_gcv(Phi, D, y, lam), rel=1e-8)


def test_loocv_shortcut(rng):
    v, y = noisy(rng, T=60)
    lam = 0.1
    _, fit = fit_curve(v, y, SPEC, lam)
    errs = []
    for i in range(len(v)):
        keep = np.arange(len(v)) != i
        c, _ = fit_curve(v[keep], y[keep], SPEC, lam)
        errs.append(y[i] - c(v[i]))
    assert fit.loocv == pytest.approx(math.sqrt(np.mean(np.square(errs))), rel=1e-7)


@pytest.mark.property
@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_gcv_minimiser_vs_brute_force(seed):
    rng = np.random.default_rng(seed)
    v, y = noisy(rng, T=120, sd=0.3)
    Phi, D = design_matrix(SPEC, v), difference_matrix(SPEC)
    fine = np.logspace(-6, 2, 401)
    brute = fine[int(np.argmin([dense_gcv(Phi, D, y, lam) for lam in fine]))]
    reg = register(MultiSensorSeries(1, len(v), (2,), y[:, None]))
    sel = select_global_lambda([reg], SPEC)
    step = np.log10(DEFAULT_GRID[1] / DEFAULT_GRID[0])
    assert abs(np.log10(sel.lam) - np.log10(brute)) <= step + 1e-9


def test_large_lambda_gives_least_squares_line(rng):
    v, y = noisy(rng)
    curve, _ = fit_curve(v, y, SPEC, 1e12)
    line = np.polyval(np.polyfit(v, y, 1), v)
    assert np.max(np.abs(curve(v) - line)) < 1e-6


def test_zero_lambda_reproduces_cubic():
    v = np.linspace(0, 1, 80)
    y = 1 - 2 * v + 0.5 * v**2 + 3 * v**3
    curve, fit = fit_curve(v, y, SPEC, 0.0)
    np.testing.assert_allclose(curve(v), y, atol=1e-10)
    assert fit.residual_mse < 1e-20


def test_constant_data_any_lambda():
    v = np.linspace(0, 1, 50)
    for lam in (0.0, 1.0, 1e6):
        curve, _ = fit_curve(v, np.full(50, 4.2), SPEC, lam)
        np.testing.assert_allclose(curve(v), 4.2, atol=1e-9)


def test_singular_system_detected():
    v = np.array([0.5, 0.6])
    with pytest.raises(SmoothingError):
        PenalizedSystem(v, SPEC).solve(np.array([1.0, 2.0]), 0.0)


def test_gcv_infinite_without_dof():
    assert np.isinf(gcv_score([1.0], 10, 10.0)[0])


def test_negative_lambda_rejected(rng):
    v, y = noisy(rng)
    with pytest.raises(ValueError):
        fit_curve(v, y, SPEC, -1.0)
    with pytest.raises(ValueError):
        gcv_profile(v, y, SPEC, [1.0, -1.0])


def test_argmin_prefers_larger_on_ties():
    assert argmin_prefer_larger([1, 2, 3], [5.0, 1.0, 1.0]) == 2
    with pytest.raises(SmoothingError):
        argmin_prefer_larger([1, 2], [np.inf, np.nan])


def test_global_lambda_skips_failing_values(fleet):
    regs = [register(MultiSensorSeries(s.unit_id, s.length, (2, 3), s.sensors[:, [1, 2]])) for s in fleet[0][:5]]
    # lambda = 0 with more basis functions than a short series has points cannot be solved
    short = register(MultiSensorSeries(99, 10, (2, 3), regs[0].values[:10]))
    sel = select_global_lambda(regs + [short], SPEC, grid=(0.0, 1.0, 10.0))
    assert math.isnan(sel.mean_score[0])
    assert sel.lam in (1.0, 10.0)
    assert sel.n_curves == 12


def test_select_basis_and_lambda(fleet):
    regs = [register(MultiSensorSeries(s.unit_id, s.length, (2,), s.sensors[:, [1]])) for s in fleet[0][:10]]
    spec, sel = select_basis_and_lambda(regs, [5, 10, 19], grid=(1e-3, 1e-1, 10.0))
    assert spec.n_interior in (5, 10, 19)
    assert sel.lam in (1e-3, 1e-1, 10.0)


def test_smooth_registered_shape(fleet):
    s = fleet[0][0]
    reg = register(MultiSensorSeries(s.unit_id, s.length, (2, 3, 4), s.sensors[:, 1:4]))
    assert smooth_registered(reg, SPEC, 1.0).shape == (3, SPEC.n_basis)


def test_registration_maps_life_to_unit_interval():
    s = MultiSensorSeries(7, 4, (2,), np.arange(4.0)[:, None])
    reg = register(s)
    np.testing.assert_allclose(reg.v, [0.25, 0.5, 0.75, 1.0])
    assert to_registered(192, 192) == 1.0
    with pytest.raises(DomainError):
        to_registered(200, 192)


def test_unregister_chain_rule():
    curve = FunctionalCurve(SPEC, np.linspace(0, 1, SPEC.n_basis) ** 2)
    T = 200.0
    t = np.array([50.0, 120.0])
    assert np.allclose(unregister_eval(curve, T, t, 1), curve(t / T, 1) / T)
    assert np.allclose(unregister_eval(curve, T, t, 2), curve(t / T, 2) / T**2)
    assert np.ndim(unregister_eval(curve, T, 10.0)) == 0
    with pytest.raises(ValueError):
        unregister_eval(curve, T, t, 3)


def test_linear_curve_derivative_on_cycle_scale():
    a, b = 2.0, 5.0
    curve = FunctionalCurve(SPEC, a + b * greville(SPEC))
    t = np.linspace(0, 100, 11)
    np.testing.assert_allclose(unregister_eval(curve, 100, t, 1), b / 100, rtol=1e-10)


def test_short_noisy_sine_interior_minimum():
    rng = np.random.default_rng(2)
    v = np.arange(1, 31) / 30
    y = np.sin(2 * np.pi * v) + 0.3 * rng.normal(size=30)
    spec = BasisSpec(3, 6)
    prof = [f.gcv for f in gcv_profile(v, y, spec, DEFAULT_GRID)]
    k = argmin_prefer_larger(DEFAULT_GRID, prof)
    assert 0 < k < len(DEFAULT_GRID) - 1
    Phi, D = design_matrix(spec, v), difference_matrix(spec)
    fine = np.logspace(-6, 2, 801)
    brute = fine[int(np.argmin([dense_gcv(Phi, D, y, lam) for lam in fine]))]
    assert abs(np.log10(DEFAULT_GRID[k]) - np.log10(brute)) <= np.log10(DEFAULT_GRID[1] / DEFAULT_GRID[0])


def test_noiseless_data_prefers_smallest_lambda():
    v = np.arange(1, 101) / 100
    # a cubic lies in the spline space but not in the penalty null space
    y = 4 * v**3 - v
    prof = [f.gcv for f in gcv_profile(v, y, SPEC, DEFAULT_GRID)]
    assert argmin_prefer_larger(DEFAULT_GRID, prof) == 0


def test_two_curve_sample_minimises_summed_profile():
    rng = np.random.default_rng(4)
    regs, total = [], np.zeros(len(DEFAULT_GRID))
    for T, sd in ((90, 0.05), (140, 0.5)):
        v = np.arange(1, T + 1) / T
        y = np.cos(4 * v) + sd * rng.normal(size=T)
        regs.append(register(MultiSensorSeries(T, T, (2,), y[:, None])))
        Phi, D = design_matrix(SPEC, v), difference_matrix(SPEC)
        total += [dense_gcv(Phi, D, y, lam) for lam in DEFAULT_GRID]
    sel = select_global_lambda(regs, SPEC)
    assert sel.lam == DEFAULT_GRID[int(np.argmin(total))]
    np.testing.assert_allclose(sel.mean_score, total / 2, rtol=1e-8)
