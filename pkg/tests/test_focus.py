import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwals import ConfigError, DomainError, NumericError, custom, eval_focus, focus_gradient
from fwals import irf, linear, parse_focus
from fwals.focus import companion, eval_focus_rows, finite_diff_gradient


def stable_ar3(rng, radius=0.95):
    """AR(3) coefficients whose companion matrix has spectral radius below ``radius``."""
    while True:
        b = rng.uniform(-1, 1, size=3)
        if np.max(np.abs(np.linalg.eigvals(companion(b)))) < radius:
            return b


def test_linear_value_and_gradient():
    fs = linear([1, 1, 1])
    assert eval_focus(fs, [0.1, 0.2, 0.3]) == pytest.approx(0.6)
    np.testing.assert_array_equal(focus_gradient(fs, [5.0, -1.0, 2.0]), [1, 1, 1])


def test_irf_small_horizons():
    b = [0.5, 0.2, 0.1]
    assert eval_focus(irf(0), b) == 1.0
    assert eval_focus(irf(1), b) == pytest.approx(0.5)
    A = np.array([[0.5, 0.2, 0.1], [1, 0, 0], [0, 1, 0]])
    assert eval_focus(irf(2), b) == pytest.approx((A @ A)[0, 0])
    assert eval_focus(irf(2), b) == pytest.approx(0.45)
    np.testing.assert_array_equal(focus_gradient(irf(1), b), [1, 0, 0])
    np.testing.assert_array_equal(focus_gradient(irf(0), b), [0, 0, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 12))
def test_irf_satisfies_ar_recursion(seed, h):
    b = stable_ar3(np.random.default_rng(seed))
    mu = [1.0]
    for s in range(1, h + 1):
        mu.append(sum(b[j - 1] * mu[s - j] for j in range(1, min(s, 3) + 1)))
    assert eval_focus(irf(h), b) == pytest.approx(mu[h], abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3, 5, 7, 10]))
def test_irf_gradient_matches_finite_differences(seed, h):
    b = stable_ar3(np.random.default_rng(seed))
    fs = irf(h)
    g = focus_gradient(fs, b)
    fd = finite_diff_gradient(lambda x: eval_focus(fs, x), b, 1e-6)
    np.testing.assert_allclose(g, fd, atol=max(1e-6, 1e-4 * np.max(np.abs(g))))


def test_irf_gradient_reference_point():
    b = np.array([0.5, 0.1, 0.05])
    fs = irf(5)
    g = focus_gradient(fs, b)
    fd = finite_diff_gradient(lambda x: eval_focus(fs, x), b, 1e-6)
    np.testing.assert_allclose(g, fd, rtol=1e-5)


def test_finite_differences_simple():
    np.testing.assert_allclose(finite_diff_gradient(np.sum, np.zeros(4)), 1.0, atol=1e-10)
    g = finite_diff_gradient(lambda b: b[0] ** 2, np.array([3.0, 1.0]))
    assert g[0] == pytest.approx(6.0, abs=1e-6)
    with pytest.raises(ConfigError):
        finite_diff_gradient(np.sum, np.zeros(2), step=0.0)
    with pytest.raises(NumericError):
        finite_diff_gradient(lambda b: np.nan, np.zeros(2))


def test_custom_focus_with_and_without_gradient():
    f = custom(lambda b: float(b[0] * b[1]))
    np.testing.assert_allclose(focus_gradient(f, [2.0, 3.0]), [3.0, 2.0], atol=1e-6)
    g = custom(lambda b: float(b[0] * b[1]), gradient=lambda b: np.array([b[1], b[0]]))
    np.testing.assert_array_equal(focus_gradient(g, [2.0, 3.0]), [3.0, 2.0])
    with pytest.raises(NumericError):
        eval_focus(custom(lambda b: np.inf), [1.0])


def test_parse_focus_grammar():
    fs = parse_focus("linear:1,0.5,-2")
    np.testing.assert_array_equal(fs.coeffs, [1, 0.5, -2])
    assert parse_focus("irf:h=5").horizon == 5
    assert parse_focus(" IRF:h=0 ").label() == "irf:h=0"
    for bad in ("linear:a,b", "irf:5", "irf:h=-1", "quad:1", "linear:"):
        with pytest.raises(ConfigError):
            parse_focus(bad)


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        eval_focus(linear([1, 1]), [1, 2, 3])


def test_rows_match_single_evaluation(rng):
    B = rng.uniform(-0.3, 0.3, size=(6, 3))
    for fs in (linear([1, 2, 3]), irf(4)):
        np.testing.assert_allclose(eval_focus_rows(fs, B), [eval_focus(fs, r) for r in B])
