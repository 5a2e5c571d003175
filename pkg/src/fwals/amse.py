"""Plug-in asymptotic components and the AMSE of the focused WALS estimator.

Notation follows the local-to-zero frame: beta2 = delta / sqrt(N),
sqrt(N) beta2_hat -> C^-1 delta + B R with R ~ N(0, Omega), and
sqrt(N)(beta1_WALS - beta1) -> Xi C (I - W) C^-1 delta + Psi R.

For weights w the focused AMSE is bias(w)^2 + var(w) with

    bias(w) = D' Xi delta - w' V C^-1 delta
    var(w)  = D' Psi Omega Psi' D
            = D' Q11^-1 Omega11 Q11^-1 D - 2 w' V B Omega H Q11^-1 D + w' V B Omega B' V w

where V = diag(C' Xi' D). The plug-in version replaces delta delta' by
the bias-corrected delta_hat delta_hat' - C B Omega B' C'.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, NearSingularityError
from .estimators import CoreEstimates
from .focus import FocusSpec, focus_gradient
from .model import Dataset, check_box
from .ortho import OrthoTransform, inv_sqrt_spd

OMEGA_MODES = ("homoskedastic", "hc0")


@dataclass(frozen=True)
class AsymptoticComponents:
    Q11_inv: np.ndarray
    Xi_hat: np.ndarray
    C_hat: np.ndarray
    C_inv: np.ndarray
    B_hat: np.ndarray
    Omega_hat: np.ndarray
    delta_hat: np.ndarray
    delta_outer_corrected: np.ndarray
    D_hat: np.ndarray
    V_hat: np.ndarray

    @property
    def k1(self) -> int:
        return self.Xi_hat.shape[0]

    @property
    def k2(self) -> int:
        return self.Xi_hat.shape[1]

    @property
    def H(self) -> np.ndarray:
        return np.vstack([np.eye(self.k1), np.zeros((self.k2, self.k1))])

    @property
    def v(self) -> np.ndarray:
        """Diagonal of V_hat."""
        return np.diag(self.V_hat).copy()

    def psi(self, w) -> np.ndarray:
        """Psi(W) = [Q11^-1 + Xi C W C' Xi',  -Xi C W C'], shape (k1, k)."""
        w = np.asarray(w, dtype=float)
        XiC = self.Xi_hat @ self.C_hat
        XiCW = XiC * w[None, :]
        return np.hstack([self.Q11_inv + XiCW @ XiC.T, -XiCW @ self.C_hat.T])


@dataclass(frozen=True)
class AmseQuadratic:
    """objective(w) = w' A w + 2 b' w + c0."""

    A: np.ndarray
    b: np.ndarray
    c0: float

    def __call__(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ self.A @ w + 2 * self.b @ w + self.c0)

    def batch(self, W: np.ndarray) -> np.ndarray:
        """Objective at every row of W."""
        return np.einsum("ij,jk,ik->i", W, self.A, W) + 2 * W @ self.b + self.c0


def estimate_omega(ds: Dataset, residuals, mode: str = "homoskedastic",
                   sigma2: Optional[float] = None) -> np.ndarray:
    """Long-run covariance of X'eps/sqrt(N) for X = [X1 X2].

    ``homoskedastic`` gives sigma2 X'X/N, where sigma2 defaults to the
    degrees-of-freedom corrected residual variance; ``hc0`` gives
    (1/N) sum e_i^2 x_i x_i'.
    """
    X = ds.X
    e = np.asarray(residuals, dtype=float).reshape(-1)
    n = ds.N
    if mode == "homoskedastic":
        if sigma2 is None:
            sigma2 = float(e @ e) / (n - ds.k)
        out = sigma2 * (X.T @ X) / n
    elif mode == "hc0":
        Xe = X * e[:, None]
        out = Xe.T @ Xe / n
    else:
        raise ConfigError(f"unknown omega mode {mode!r}; choose from {OMEGA_MODES}")
    return 0.5 * (out + out.T)


def build_components(ds: Dataset, ot: OrthoTransform, ce: CoreEstimates, fs: FocusSpec,
                     omega_mode: str = "homoskedastic") -> AsymptoticComponents:
    n = ds.N
    Q11 = ds.X1.T @ ds.X1 / n
    try:
        Q11_inv = np.linalg.inv(Q11)
    except np.linalg.LinAlgError as exc:
        raise NearSingularityError(f"X1'X1/N is singular: {exc}") from exc
    Q11_inv = 0.5 * (Q11_inv + Q11_inv.T)
    Omega = estimate_omega(ds, ce.residuals_full, omega_mode, sigma2=ce.sigma2_hat)
    C = ot.C
    B = np.hstack([-C.T @ ce.Xi_hat.T, C.T])
    delta_hat = np.sqrt(n) * C @ ce.beta2_hat
    CB = C @ B
    corr = np.outer(delta_hat, delta_hat) - CB @ Omega @ CB.T
    D = focus_gradient(fs, ce.beta1_full)
    V = np.diag(C.T @ ce.Xi_hat.T @ D)
    return AsymptoticComponents(
        Q11_inv=Q11_inv,
        Xi_hat=ce.Xi_hat,
        C_hat=C,
        C_inv=ot.C_inv,
        B_hat=B,
        Omega_hat=Omega,
        delta_hat=delta_hat,
        delta_outer_corrected=0.5 * (corr + corr.T),
        D_hat=D,
        V_hat=V,
    )


def _delta_outer_in_beta2_coords(ac: AsymptoticComponents) -> np.ndarray:
    # C^-1 Delta C^-T: the corrected outer product for the semi-orthogonal coefficients
    K = ac.C_inv @ ac.delta_outer_corrected @ ac.C_inv.T
    return 0.5 * (K + K.T)


def amse_objective(ac: AsymptoticComponents, w) -> float:
    """Plug-in AMSE at regressor-wise weights w, summed term by term.

    The value can be negative: the corrected delta outer product is
    unbiased, not positive semi-definite.
    """
    w = check_box(w, ac.k2)
    D, Xi, V = ac.D_hat, ac.Xi_hat, ac.V_hat
    Dlt = ac.delta_outer_corrected
    K = _delta_outer_in_beta2_coords(ac)
    BOB = ac.B_hat @ ac.Omega_hat @ ac.B_hat.T
    HQD = ac.H @ ac.Q11_inv @ D
    Omega11 = ac.Omega_hat[: ac.k1, : ac.k1]
    Vw = V @ w
    return float(
        D @ Xi @ Dlt @ Xi.T @ D
        + Vw @ K @ Vw
        - 2 * Vw @ ac.C_inv @ Dlt @ Xi.T @ D
        + D @ ac.Q11_inv @ Omega11 @ ac.Q11_inv @ D
        + Vw @ BOB @ Vw
        - 2 * Vw @ ac.B_hat @ ac.Omega_hat @ HQD
    )


def as_quadratic(ac: AsymptoticComponents) -> AmseQuadratic:
    D, Xi, V = ac.D_hat, ac.Xi_hat, ac.V_hat
    K = _delta_outer_in_beta2_coords(ac)
    BOB = ac.B_hat @ ac.Omega_hat @ ac.B_hat.T
    A = V @ (K + BOB) @ V
    b = -V @ ac.C_inv @ ac.delta_outer_corrected @ Xi.T @ D \
        - V @ ac.B_hat @ ac.Omega_hat @ ac.H @ ac.Q11_inv @ D
    Omega11 = ac.Omega_hat[: ac.k1, : ac.k1]
    c0 = D @ Xi @ ac.delta_outer_corrected @ Xi.T @ D + D @ ac.Q11_inv @ Omega11 @ ac.Q11_inv @ D
    return AmseQuadratic(A=0.5 * (A + A.T), b=b, c0=float(c0))


# --------------------------------------------------------------------------
# Population quantities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Population:
    """Population moments for the AMSE oracle.

    Q is E[x x'] over [x1; x2], Omega the variance of the score limit,
    delta = sqrt(N) beta2 in the original auxiliary coordinates.
    """

    Q: np.ndarray
    Omega: np.ndarray
    delta: np.ndarray
    beta1: np.ndarray
    focus: FocusSpec


def population_components(pop: Population) -> AsymptoticComponents:
    """Components at the population limits, with the exact delta delta'."""
    Q = np.asarray(pop.Q, dtype=float)
    k1 = np.asarray(pop.beta1).size
    eig = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    if eig[0] <= 0:
        raise NearSingularityError("population Q is not positive definite", eigenvalue=float(eig[0]))
    Q11, Q12, Q22 = Q[:k1, :k1], Q[:k1, k1:], Q[k1:, k1:]
    Q11_inv = np.linalg.inv(Q11)
    Xi = Q11_inv @ Q12
    S = Q22 - Q12.T @ Xi
    lam = 1.0 / np.sqrt(np.diag(S))
    P = lam[:, None] * S * lam[None, :]
    P_is = inv_sqrt_spd(0.5 * (P + P.T))
    C = np.diag(lam) @ P_is
    C_inv = np.linalg.inv(C)
    B = np.hstack([-C.T @ Xi.T, C.T])
    D = focus_gradient(pop.focus, pop.beta1)
    delta = np.asarray(pop.delta, dtype=float)
    return AsymptoticComponents(
        Q11_inv=Q11_inv, Xi_hat=Xi, C_hat=C, C_inv=C_inv, B_hat=B,
        Omega_hat=np.asarray(pop.Omega, dtype=float), delta_hat=delta,
        delta_outer_corrected=np.outer(delta, delta), D_hat=D,
        V_hat=np.diag(C.T @ Xi.T @ D),
    )


def bias_variance(ac: AsymptoticComponents, w):
    """(squared bias, variance) via the Psi representation.

    Squared bias uses whatever delta outer product the components carry,
    so on plug-in components it is the bias-corrected estimate.
    """
    w = np.asarray(w, dtype=float)
    D = ac.D_hat
    a = D @ ac.Xi_hat @ ac.C_hat @ np.diag(1.0 - w) @ ac.C_inv
    bias2 = float(a @ ac.delta_outer_corrected @ a)
    Psi = ac.psi(w)
    var = float(D @ Psi @ ac.Omega_hat @ Psi.T @ D)
    return bias2, var


def theoretical_amse(pop: Population, w) -> float:
    w = check_box(w, np.asarray(pop.delta).size)
    bias2, var = bias_variance(population_components(pop), w)
    return bias2 + var
