import numpy as np
import pytest

from fwals import Dataset


def random_dataset(rng, N=60, k1=3, k2=3, tau=0.3, beta_scale=0.5):
    """Equicorrelated Gaussian regressors and a linear response with unit noise."""
    k = k1 + k2
    S = np.full((k, k), tau)
    np.fill_diagonal(S, 1.0)
    X = rng.standard_normal((N, k)) @ np.linalg.cholesky(S).T
    beta = beta_scale * rng.standard_normal(k)
    y = X @ beta + rng.standard_normal(N)
    return Dataset(y, X[:, :k1], X[:, k1:])


def ols(X, y):
    return np.linalg.lstsq(X, y, rcond=None)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
