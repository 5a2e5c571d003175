import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwals import (
    Dataset,
    DomainError,
    enumerate_submodels,
    fit_core,
    semi_orthogonalize,
    submodel_beta1,
    submodel_beta1_all,
    submodel_masks,
    wals_beta1,
)
from fwals.estimators import induced_box_weights
from fwals.ortho import residual_maker_apply

from conftest import ols, random_dataset


def fitted(ds):
    ot = semi_orthogonalize(ds)
    return ot, fit_core(ds, ot)


def test_exact_fit_gives_zero_aux_and_residuals(rng):
    N = 30
    X1 = rng.standard_normal((N, 2))
    X2 = residual_maker_apply(X1, rng.standard_normal((N, 2)))
    y = X1 @ np.array([1.0, -2.0])
    ot, ce = fitted(Dataset(y, X1, X2))
    np.testing.assert_allclose(ce.beta2_hat, 0.0, atol=1e-12)
    np.testing.assert_allclose(ce.residuals_full, 0.0, atol=1e-12)


def test_two_variable_textbook_formulas(rng):
    N = 50
    x1 = rng.standard_normal(N)
    x2 = 0.4 * x1 + rng.standard_normal(N)
    y = 0.7 * x1 - 0.3 * x2 + rng.standard_normal(N)
    ot, ce = fitted(Dataset(y, x1[:, None], x2[:, None]))
    s11, s22, s12 = x1 @ x1, x2 @ x2, x1 @ x2
    s1y, s2y = x1 @ y, x2 @ y
    det = s11 * s22 - s12 ** 2
    b1 = (s22 * s1y - s12 * s2y) / det
    b2 = (s11 * s2y - s12 * s1y) / det
    assert ce.beta1_full[0] == pytest.approx(b1, rel=1e-10)
    assert ce.beta1_narrow[0] == pytest.approx(s1y / s11, rel=1e-12)
    assert (ot.C @ ce.beta2_hat)[0] == pytest.approx(b2, rel=1e-10)
    resid = y - b1 * x1 - b2 * x2
    assert ce.sigma2_hat == pytest.approx(resid @ resid / (N - 2), rel=1e-10)


def test_submodel_extremes(rng):
    ds = random_dataset(rng, N=60, k1=3, k2=3)
    ot, ce = fitted(ds)
    np.testing.assert_array_equal(submodel_beta1(ce, ot, [False] * 3), ce.beta1_narrow)
    full = ols(np.hstack([ds.X1, ds.X2]), ds.y)[:3]
    np.testing.assert_allclose(submodel_beta1(ce, ot, [True] * 3), full, atol=1e-8)
    np.testing.assert_allclose(wals_beta1(ce, ot, np.ones(3)), full, atol=1e-8)
    np.testing.assert_array_equal(wals_beta1(ce, ot, np.zeros(3)), ce.beta1_narrow)
    np.testing.assert_allclose(ce.beta1_full, full, atol=1e-8)


def test_single_transformed_regressor_matches_ols(rng):
    ds = random_dataset(rng, N=60, k1=3, k2=2)
    ot, ce = fitted(ds)
    direct = ols(np.column_stack([ds.X1, ot.X2_star[:, 0]]), ds.y)[:3]
    np.testing.assert_allclose(submodel_beta1(ce, ot, [True, False]), direct, atol=1e-10)


def test_every_submodel_matches_ols_on_transformed_design(rng):
    ds = random_dataset(rng, N=40, k1=2, k2=3)
    ot, ce = fitted(ds)
    for sel in enumerate_submodels(3):
        Z = np.column_stack([ds.X1, ot.X2_star[:, sel.mask]])
        np.testing.assert_allclose(submodel_beta1(ce, ot, sel), ols(Z, ds.y)[:2], atol=1e-10)


def test_global_fit_decomposition(rng):
    ds = random_dataset(rng, N=45, k1=3, k2=4)
    ot, ce = fitted(ds)
    P1y = ds.y - residual_maker_apply(ds.X1, ds.y)
    for sel in enumerate_submodels(4):
        Z = np.column_stack([ds.X1, ot.X2_star[:, sel.mask]])
        fit = Z @ ols(Z, ds.y)
        decomposed = P1y + ot.M1X2_star[:, sel.mask] @ ce.beta2_hat[sel.mask]
        np.testing.assert_allclose(fit, decomposed, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_partial_sum_identity(seed, k2):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, N=40, k1=3, k2=k2)
    ot, ce = fitted(ds)
    masks = submodel_masks(k2)
    u = rng.dirichlet(np.ones(2 ** k2))
    averaged = u @ submodel_beta1_all(ce, ot, masks)
    np.testing.assert_allclose(wals_beta1(ce, ot, induced_box_weights(u, masks)), averaged,
                               atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 1))
def test_wals_is_affine_in_weights(seed, alpha):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, N=30, k1=2, k2=3)
    ot, ce = fitted(ds)
    w, v = rng.uniform(size=3), rng.uniform(size=3)
    lhs = wals_beta1(ce, ot, alpha * w + (1 - alpha) * v)
    rhs = alpha * wals_beta1(ce, ot, w) + (1 - alpha) * wals_beta1(ce, ot, v)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_weights_outside_box_rejected(rng):
    ds = random_dataset(rng, N=30, k1=2, k2=2)
    ot, ce = fitted(ds)
    with pytest.raises(DomainError):
        wals_beta1(ce, ot, [0.5, 1.1])
    with pytest.raises(DomainError):
        submodel_beta1(ce, ot, [True])


def test_core_recovers_truth_in_monte_carlo():
    from fwals.simulate import BasicDesignConfig, basic_coefficients, gen_basic, solve_cx

    cfg = BasicDesignConfig(N=200, k2=2, tau=0.3, r2=0.5)
    beta1, _ = basic_coefficients(cfg, solve_cx(cfg))
    est = []
    for r in range(500):
        draw = gen_basic(cfg, np.random.default_rng([99, r]))
        est.append(fitted(draw.dataset)[1].beta1_full)
    est = np.array(est)
    se = est.std(axis=0, ddof=1) / np.sqrt(len(est))
    assert np.all(np.abs(est.mean(axis=0) - beta1) < 3 * se)
