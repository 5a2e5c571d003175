import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwals import Dataset, NearSingularityError, semi_orthogonalize
from fwals.ortho import inv_sqrt_spd, residual_maker_apply, residual_maker_dense, sqrt_spd

from conftest import random_dataset


def test_residual_maker_annihilates_x1(rng):
    X1 = rng.standard_normal((40, 3))
    np.testing.assert_allclose(residual_maker_apply(X1, X1), 0.0, atol=1e-12)


def test_residual_maker_fixes_orthogonal_complement(rng):
    X1 = rng.standard_normal((40, 3))
    V = rng.standard_normal((40, 2))
    V = V - X1 @ np.linalg.lstsq(X1, V, rcond=None)[0]
    np.testing.assert_allclose(residual_maker_apply(X1, V), V, atol=1e-12)


def test_residual_maker_matches_dense_oracle(rng):
    X1 = rng.standard_normal((10, 2))
    V = rng.standard_normal((10, 1))
    M1 = np.eye(10) - X1 @ np.linalg.inv(X1.T @ X1) @ X1.T
    np.testing.assert_allclose(residual_maker_apply(X1, V), M1 @ V, atol=1e-12)
    np.testing.assert_allclose(residual_maker_dense(X1), M1, atol=1e-12)


def test_inv_sqrt_simple_cases():
    np.testing.assert_allclose(inv_sqrt_spd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_spd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)


def test_inv_sqrt_defining_property(rng):
    G = rng.standard_normal((5, 5))
    A = G @ G.T + 0.5 * np.eye(5)
    B = inv_sqrt_spd(A)
    np.testing.assert_allclose(B, B.T, atol=1e-14)
    np.testing.assert_allclose(B @ A @ B, np.eye(5), atol=1e-10)
    assert np.all(np.linalg.eigvalsh(B) > 0)
    R = sqrt_spd(A)
    np.testing.assert_allclose(R @ R, A, atol=1e-10)


def test_inv_sqrt_rejects_singular_and_asymmetric():
    with pytest.raises(NearSingularityError) as info:
        inv_sqrt_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert info.value.eigenvalue is not None
    with pytest.raises(Exception):
        inv_sqrt_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_fixed_point_of_transform(rng):
    N = 50
    X1 = rng.standard_normal((N, 2))
    Z = residual_maker_apply(X1, rng.standard_normal((N, 3)))
    Q, _ = np.linalg.qr(Z)
    X2 = np.sqrt(N) * Q  # M1-residualized, orthogonal, unit second moment
    ot = semi_orthogonalize(Dataset(rng.standard_normal(N), X1, X2))
    np.testing.assert_allclose(ot.Lambda, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(ot.P, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(ot.X2_star, X2, atol=1e-10)


def test_scalar_case(rng):
    N = 40
    X1 = rng.standard_normal((N, 2))
    x2 = rng.standard_normal((N, 1))
    ot = semi_orthogonalize(Dataset(rng.standard_normal(N), X1, x2))
    m = residual_maker_apply(X1, x2)
    np.testing.assert_allclose(ot.X2_star, x2 / np.sqrt((m.T @ m).item() / N), rtol=1e-12)
    Ms = residual_maker_apply(X1, ot.X2_star)
    np.testing.assert_allclose(Ms.T @ Ms / N, [[1.0]], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.sampled_from([0.0, 0.3, 0.7]))
def test_transform_invariants(seed, k2, tau):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, N=50, k1=2, k2=k2, tau=tau)
    ot = semi_orthogonalize(ds)
    N = ds.N
    M1X2s = residual_maker_dense(ds.X1) @ ot.X2_star
    np.testing.assert_allclose(M1X2s.T @ M1X2s / N, np.eye(k2), atol=1e-8)
    np.testing.assert_allclose(ot.P_inv_sqrt @ ot.P @ ot.P_inv_sqrt, np.eye(k2), atol=1e-8)
    np.testing.assert_allclose(np.diag(ot.P), 1.0, atol=1e-10)
    S = residual_maker_apply(ds.X1, ds.X2)
    np.testing.assert_allclose(np.diag(ot.Lambda) ** -2, np.diag(S.T @ S) / N, rtol=1e-10)
    np.testing.assert_allclose(ot.C, ot.Lambda @ ot.P_inv_sqrt, atol=1e-12)
    np.testing.assert_allclose(ot.C_inv, sqrt_spd(ot.P) @ np.linalg.inv(ot.Lambda), atol=1e-8)
    np.testing.assert_allclose(ot.C @ ot.C_inv, np.eye(k2), atol=1e-8)


def test_collinear_aux_block_errors(rng):
    N = 40
    X1 = rng.standard_normal((N, 2))
    a = rng.standard_normal(N)
    X2 = np.column_stack([a, 2 * a + 1e-14 * rng.standard_normal(N)])
    with pytest.raises(NearSingularityError):
        semi_orthogonalize(Dataset(rng.standard_normal(N), X1, X2))
