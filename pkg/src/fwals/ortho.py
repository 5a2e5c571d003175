"""Semi-orthogonalization of the auxiliary regressors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NearSingularityError
from .model import Dataset, check_full_column_rank

DENSE_M1_MAX_N = 512
EIG_FLOOR_REL = 1e-12


def residual_maker_apply(X1: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Return M1 @ V, with M1 = I - X1 (X1'X1)^-1 X1'.

    Uses a thin QR of X1, so the N x N projector is never formed.
    """
    X1 = np.asarray(X1, dtype=float)
    V = np.asarray(V, dtype=float)
    if X1.ndim == 1:
        X1 = X1[:, None]
    check_full_column_rank(X1, "X1")
    Q, _ = np.linalg.qr(X1, mode="reduced")
    return V - Q @ (Q.T @ V)


def residual_maker_dense(X1: np.ndarray) -> np.ndarray:
    """Explicit N x N residual maker. Only for small N (test oracles)."""
    X1 = np.asarray(X1, dtype=float)
    n = X1.shape[0]
    if n > DENSE_M1_MAX_N:
        raise ConfigError(f"dense residual maker refused for N={n} > {DENSE_M1_MAX_N}")
    return np.eye(n) - X1 @ np.linalg.solve(X1.T @ X1, X1.T)


def _sym_eig(A: np.ndarray, what: str):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"{what}: expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise ConfigError(f"{what}: matrix is not symmetric")
    k = A.shape[0]
    floor = EIG_FLOOR_REL * np.trace(A) / k
    lam, U = np.linalg.eigh(0.5 * (A + A.T))
    if lam[0] <= floor or not np.isfinite(lam[0]):
        raise NearSingularityError(
            f"{what}: eigenvalue {lam[0]:.3e} is below the floor {floor:.3e}",
            eigenvalue=float(lam[0]),
        )
    return lam, U


def inv_sqrt_spd(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root B of an SPD matrix, so that B A B = I."""
    lam, U = _sym_eig(A, "inv_sqrt_spd")
    return (U / np.sqrt(lam)) @ U.T


def sqrt_spd(A: np.ndarray) -> np.ndarray:
    lam, U = _sym_eig(A, "sqrt_spd")
    return (U * np.sqrt(lam)) @ U.T


@dataclass(frozen=True)
class OrthoTransform:
    Lambda: np.ndarray
    P: np.ndarray
    P_inv_sqrt: np.ndarray
    X2_star: np.ndarray
    C: np.ndarray
    C_inv: np.ndarray
    M1X2_star: np.ndarray
    S: np.ndarray  # X2' M1 X2 / N

    @property
    def k2(self) -> int:
        return self.C.shape[0]


def semi_orthogonalize(ds: Dataset) -> OrthoTransform:
    """X2* = X2 Lambda P^{-1/2}, which makes (X2*' M1 X2*)/N the identity.

    Lambda rescales each partialled-out auxiliary column to unit second
    moment; P is the resulting correlation-type matrix.
    """
    n = ds.N
    M1X2 = residual_maker_apply(ds.X1, ds.X2)
    S = M1X2.T @ M1X2 / n
    S = 0.5 * (S + S.T)
    d = np.diag(S)
    if np.any(d <= 0):
        raise NearSingularityError(
            "an auxiliary regressor lies in the span of X1", eigenvalue=float(d.min())
        )
    lam_diag = 1.0 / np.sqrt(d)
    Lambda = np.diag(lam_diag)
    P = lam_diag[:, None] * S * lam_diag[None, :]
    P = 0.5 * (P + P.T)
    P_inv_sqrt = inv_sqrt_spd(P)
    C = Lambda @ P_inv_sqrt
    # P^{1/2} = P^{-1/2} P
    C_inv = (P_inv_sqrt @ P) / lam_diag[None, :]
    return OrthoTransform(
        Lambda=Lambda,
        P=P,
        P_inv_sqrt=P_inv_sqrt,
        X2_star=ds.X2 @ C,
        C=C,
        C_inv=C_inv,
        M1X2_star=M1X2 @ C,
        S=S,
    )
