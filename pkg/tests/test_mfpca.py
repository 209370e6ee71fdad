import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfprog import mfpca
from mfprog.basis import BasisSpec, FunctionalCurve, design_matrix, gram_matrix
from mfprog.mfpca import MfpcaError, MultivariateFunctionalSample
from oracles import dense_mfpca_eigenvalues, simpson_weights

SPEC = BasisSpec(3, 8)


def random_sample(seed, n=8, J=2, spec=SPEC):
    rng = np.random.default_rng(seed)
    coefs = np.cumsum(rng.normal(size=(n, J, spec.n_basis)), axis=2)
    return MultivariateFunctionalSample(spec, tuple(range(2, 2 + J)), tuple(range(1, n + 1)),
                                        np.arange(100, 100 + n), coefs)


def l2_norm2(gram, c):
    return float(np.einsum("jb,bc,jc->", c, gram, c))


@pytest.mark.property
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 10), st.integers(1, 2))
def test_eigenvalues_match_dense_quadrature(seed, n, J):
    sample = random_sample(seed, n, J)
    model = mfpca.fit(sample, q=n - 1)
    grid = np.linspace(0, 1, 2001)
    vals = np.einsum("gb,njb->njg", design_matrix(SPEC, grid), sample.coefs)
    ref = dense_mfpca_eigenvalues(vals, simpson_weights(len(grid)))
    keep = ref > 1e-10 * ref[0]
    np.testing.assert_allclose(model.eigenvalues[: n - 1][keep], ref[keep], rtol=1e-5)


@pytest.mark.property
def test_orthonormal_eigenfunctions():
    model = mfpca.fit(random_sample(1, n=12, J=3), q=11)
    G = np.array([[model.inner(a, b) for b in model.eigen_coefs] for a in model.eigen_coefs])
    assert np.max(np.abs(G - np.eye(len(G)))) <= 1e-8


@pytest.mark.property
def test_score_variance_equals_eigenvalue():
    model = mfpca.fit(random_sample(2, n=10, J=2), q=9)
    var = model.train_scores.var(axis=0, ddof=1)
    np.testing.assert_allclose(var, model.eigenvalues[:9], rtol=1e-6)


@pytest.mark.property
def test_full_rank_reconstruction():
    sample = random_sample(3, n=9, J=2)
    model = mfpca.fit(sample, q=8)
    W = gram_matrix(SPEC)
    for i in range(sample.n):
        err = mfpca.reconstruct_coefs(model, model.train_scores[i]) - sample.coefs[i]
        assert np.sqrt(l2_norm2(W, err)) <= 1e-8


@pytest.mark.property
def test_score_matches_quadrature_projection():
    sample = random_sample(4, n=7, J=2)
    model = mfpca.fit(sample, q=3)
    grid = np.linspace(0, 1, 2001)
    w = simpson_weights(len(grid))
    Phi = design_matrix(SPEC, grid)
    for i in range(sample.n):
        dev = (sample.coefs[i] - model.mean_coefs) @ Phi.T
        ef = np.einsum("gb,kjb->kjg", Phi, model.eigen_coefs)
        ref = np.einsum("jg,kjg,g->k", dev, ef, w)
        np.testing.assert_allclose(mfpca.score(model, sample.coefs[i]), ref, atol=1e-7)
        np.testing.assert_allclose(mfpca.score(model, sample.coefs[i]), model.train_scores[i], atol=1e-10)


def test_truncation_error_is_tail_eigenvalues():
    sample = random_sample(5, n=10, J=2)
    model = mfpca.fit(sample, q=9)
    W = gram_matrix(SPEC)
    for q in (1, 3, 6):
        err = sum(l2_norm2(W, mfpca.reconstruct_coefs(model, model.train_scores[i, :q]) - sample.coefs[i])
                  for i in range(sample.n))
        assert err == pytest.approx((sample.n - 1) * model.eigenvalues[q:9].sum(), rel=1e-8)


def test_choose_q_by_variance():
    sample = random_sample(6, n=10, J=2)
    full = mfpca.fit(sample, q=9)
    ratios = np.cumsum(full.eigenvalues) / full.total_variance
    model = mfpca.fit(sample, q=0.9)
    assert model.n_components == int(np.searchsorted(ratios, 0.9 - 1e-12) + 1)
    assert mfpca.fit(sample).n_components >= 2


def test_explained_variance_rows():
    ev = mfpca.explained_variance(mfpca.fit(random_sample(7), q=3))
    assert ev[-1][2] == pytest.approx(1.0)
    assert all(a[0] >= b[0] for a, b in zip(ev, ev[1:]))


def test_orientation_by_covariate():
    sample = random_sample(8, n=10)
    life = sample.coefs[:, 0, 3] * 5 + 200
    model = mfpca.fit(sample, q=2, orient_by=life)
    for k in range(2):
        assert np.corrcoef(model.train_scores[:, k], life)[0, 1] >= 0


def test_pointwise_scaling_runs_and_reconstructs():
    sample = random_sample(9, n=10, J=2)
    model = mfpca.fit(sample, q=9, scaling="pointwise")
    W = gram_matrix(SPEC)
    # dividing by the sd curve leaves the spline space; the projection back costs a little
    for i in range(sample.n):
        rec = mfpca.reconstruct_coefs(model, model.train_scores[i])
        rel = l2_norm2(W, rec - sample.coefs[i]) / l2_norm2(W, sample.coefs[i] - model.mean_coefs)
        assert np.sqrt(rel) < 1e-2
    with pytest.raises(ValueError):
        mfpca.fit(sample, scaling="zscore")


def test_score_accepts_curves_and_rejects_foreign_basis():
    sample = random_sample(10)
    model = mfpca.fit(sample, q=2)
    curves = [FunctionalCurve(SPEC, c) for c in sample.coefs[0]]
    np.testing.assert_allclose(mfpca.score(model, curves), model.train_scores[0], atol=1e-10)
    other = BasisSpec(3, 5)
    with pytest.raises(ValueError):
        mfpca.score(model, [FunctionalCurve(other, np.zeros(other.n_basis))] * 2)


def test_save_load_round_trip(tmp_path):
    for scaling in ("none", "pointwise"):
        model = mfpca.fit(random_sample(11), q=3, scaling=scaling)
        mfpca.save_model(model, tmp_path / "m.txt")
        back = mfpca.load_model(tmp_path / "m.txt")
        assert np.array_equal(back.eigen_coefs, model.eigen_coefs)
        assert np.array_equal(back.train_scores, model.train_scores)
        assert back.unit_ids == model.unit_ids and back.scaling == scaling
    (tmp_path / "bad.txt").write_text("hello\n")
    with pytest.raises(ValueError):
        mfpca.load_model(tmp_path / "bad.txt")


def test_needs_two_engines():
    with pytest.raises((ValueError, MfpcaError)):
        random_sample(0, n=1)


def test_two_engines_plus_minus_direction():
    g = np.random.default_rng(12).normal(size=SPEC.n_basis)
    W = gram_matrix(SPEC)
    g /= np.sqrt(g @ W @ g)
    mu = np.linspace(1, 2, SPEC.n_basis)
    sample = MultivariateFunctionalSample(SPEC, (2,), (1, 2), np.array([150, 200]),
                                          np.stack([[mu + g], [mu - g]]))
    model = mfpca.fit(sample, q=1)
    # centred curves are +g and -g; covariance 2 g (x) g with the 1/(n-1) convention
    assert model.eigenvalues[0] == pytest.approx(2.0, rel=1e-10)
    assert len(model.eigenvalues) == 1
    np.testing.assert_allclose(np.abs(model.train_scores[:, 0]), 1.0, rtol=1e-10)
    grid = np.linspace(0, 1, 2001)
    vals = np.einsum("gb,njb->njg", design_matrix(SPEC, grid), sample.coefs)
    assert dense_mfpca_eigenvalues(vals, simpson_weights(len(grid)))[0] == pytest.approx(2.0, rel=1e-5)
