"""Narrow, full, sub-model and WALS least-squares estimators of beta1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import Dataset, SubmodelSelection, check_box
from .ortho import OrthoTransform, residual_maker_apply


@dataclass(frozen=True)
class CoreEstimates:
    beta1_narrow: np.ndarray
    beta2_hat: np.ndarray  # coefficients on the semi-orthogonal regressors
    Xi_hat: np.ndarray  # (X1'X1)^-1 X1'X2
    residuals_full: np.ndarray
    sigma2_hat: float
    beta1_full: np.ndarray
    rss_narrow: float
    N: int

    @property
    def rss_full(self) -> float:
        return float(self.residuals_full @ self.residuals_full)


def fit_core(ds: Dataset, ot: OrthoTransform) -> CoreEstimates:
    n, k = ds.N, ds.k
    # separate solves keep the narrow fit bit-identical to OLS on X1 alone
    beta1_narrow = np.linalg.lstsq(ds.X1, ds.y, rcond=None)[0]
    Xi_hat = np.linalg.lstsq(ds.X1, ds.X2, rcond=None)[0]
    M1y = residual_maker_apply(ds.X1, ds.y)
    beta2_hat = ot.M1X2_star.T @ M1y / n
    # Frisch-Waugh-Lovell: (M1 X2*)'(M1 X2*) = N I, so beta2_hat is the
    # full-model coefficient on X2*.
    resid = M1y - ot.M1X2_star @ beta2_hat
    beta1_full = beta1_narrow - Xi_hat @ (ot.C @ beta2_hat)
    rss = float(resid @ resid)
    return CoreEstimates(
        beta1_narrow=beta1_narrow,
        beta2_hat=beta2_hat,
        Xi_hat=Xi_hat,
        residuals_full=resid,
        sigma2_hat=rss / (n - k),
        beta1_full=beta1_full,
        rss_narrow=float(M1y @ M1y),
        N=n,
    )


def _mask_vector(sel, k2: int) -> np.ndarray:
    if isinstance(sel, SubmodelSelection):
        m = sel.mask
    else:
        m = np.asarray(sel, dtype=bool).reshape(-1)
    if m.shape[0] != k2:
        raise DomainError(f"selection has length {m.shape[0]}, expected {k2}")
    return m.astype(float)


def submodel_beta1(ce: CoreEstimates, ot: OrthoTransform, sel) -> np.ndarray:
    """beta1 of the sub-model keeping the selected semi-orthogonal regressors."""
    s = _mask_vector(sel, ot.k2)
    return ce.beta1_narrow - ce.Xi_hat @ (ot.C @ (s * ce.beta2_hat))


def submodel_beta1_all(ce: CoreEstimates, ot: OrthoTransform, masks: np.ndarray) -> np.ndarray:
    """Row m is submodel_beta1 for masks[m]; shape (M, k1)."""
    XiC = ce.Xi_hat @ ot.C
    return ce.beta1_narrow[None, :] - (masks * ce.beta2_hat[None, :]) @ XiC.T


def wals_beta1(ce: CoreEstimates, ot: OrthoTransform, w) -> np.ndarray:
    """beta1_narrow - Xi C diag(w) beta2 for regressor-wise weights w in [0, 1]^k2."""
    w = check_box(w, ot.k2)
    return ce.beta1_narrow - ce.Xi_hat @ (ot.C @ (w * ce.beta2_hat))


def induced_box_weights(u, masks: np.ndarray) -> np.ndarray:
    """Partial sums w_j = sum of u_m over sub-models containing regressor j."""
    return np.asarray(u, dtype=float) @ masks.astype(float)
