"""Scalar focus functions mu(beta1) and their gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError, NumericError


@dataclass(frozen=True)
class FocusSpec:
    """A focus function of the core coefficients.

    kind is one of ``"linear"`` (coeffs' beta1), ``"irf"`` (impulse response
    at ``horizon`` of the AR process with coefficients beta1) or ``"custom"``.
    """

    kind: str
    coeffs: Optional[np.ndarray] = None
    horizon: Optional[int] = None
    evaluator: Optional[Callable] = None
    gradient: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "linear":
            c = np.array(self.coeffs, dtype=float).reshape(-1)
            if c.size == 0 or not np.all(np.isfinite(c)):
                raise ConfigError("linear focus needs finite coefficients")
            c.setflags(write=False)
            object.__setattr__(self, "coeffs", c)
        elif self.kind == "irf":
            if self.horizon is None or int(self.horizon) != self.horizon or self.horizon < 0:
                raise ConfigError(f"IRF horizon must be a non-negative integer, got {self.horizon}")
            object.__setattr__(self, "horizon", int(self.horizon))
        elif self.kind == "custom":
            if not callable(self.evaluator):
                raise ConfigError("custom focus needs a callable evaluator")
        else:
            raise ConfigError(f"unknown focus kind {self.kind!r}")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    def label(self) -> str:
        if self.kind == "linear":
            return "linear:" + ",".join(format(c, "g") for c in self.coeffs)
        if self.kind == "irf":
            return f"irf:h={self.horizon}"
        return "custom"


def linear(coeffs) -> FocusSpec:
    return FocusSpec("linear", coeffs=coeffs)


def irf(horizon: int) -> FocusSpec:
    return FocusSpec("irf", horizon=horizon)


def custom(evaluator: Callable, gradient: Optional[Callable] = None) -> FocusSpec:
    return FocusSpec("custom", evaluator=evaluator, gradient=gradient)


def parse_focus(text: str) -> FocusSpec:
    """Parse ``linear:c1,c2,...`` or ``irf:h=<int>``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    if kind == "linear":
        try:
            return linear([float(c) for c in rest.split(",") if c.strip()])
        except ValueError:
            raise ConfigError(f"bad linear focus {text!r}") from None
    if kind == "irf":
        key, _, val = rest.partition("=")
        if key.strip() != "h":
            raise ConfigError(f"bad irf focus {text!r}; expected irf:h=<int>")
        try:
            return irf(int(val))
        except ValueError:
            raise ConfigError(f"bad irf horizon in {text!r}") from None
    raise ConfigError(f"unknown focus {text!r}; use linear:c1,c2,... or irf:h=<int>")


def companion(beta1) -> np.ndarray:
    """Companion matrix of an AR(p) with coefficients beta1."""
    b = np.asarray(beta1, dtype=float).reshape(-1)
    p = b.size
    A = np.zeros((p, p))
    A[0] = b
    A[np.arange(1, p), np.arange(p - 1)] = 1.0
    return A


def _powers(A: np.ndarray, h: int) -> list:
    out = [np.eye(A.shape[0])]
    for _ in range(h):
        out.append(out[-1] @ A)
    return out


def _check_dim(fs: FocusSpec, beta1: np.ndarray) -> None:
    if fs.kind == "linear" and fs.coeffs.size != beta1.size:
        raise DomainError(f"linear focus has {fs.coeffs.size} coefficients, beta1 has {beta1.size}")


def eval_focus(fs: FocusSpec, beta1) -> float:
    b = np.asarray(beta1, dtype=float).reshape(-1)
    _check_dim(fs, b)
    if fs.kind == "linear":
        val = float(fs.coeffs @ b)
    elif fs.kind == "irf":
        val = float(_powers(companion(b), fs.horizon)[-1][0, 0])
    else:
        val = float(fs.evaluator(b))
    if not np.isfinite(val):
        raise NumericError(f"focus {fs.label()} is not finite at beta1={b}")
    return val


def eval_focus_rows(fs: FocusSpec, B: np.ndarray) -> np.ndarray:
    """Focus evaluated at every row of B."""
    B = np.asarray(B, dtype=float)
    if fs.kind == "linear":
        _check_dim(fs, B[0])
        return B @ fs.coeffs
    return np.array([eval_focus(fs, row) for row in B])


def finite_diff_gradient(evaluator: Callable, beta1, step: float = 1e-6) -> np.ndarray:
    """Central differences (f(b + h e_j) - f(b - h e_j)) / 2h."""
    if step <= 0:
        raise ConfigError("finite-difference step must be positive")
    b = np.asarray(beta1, dtype=float).reshape(-1)
    g = np.empty_like(b)
    for j in range(b.size):
        e = np.zeros_like(b)
        e[j] = step
        fp, fm = evaluator(b + e), evaluator(b - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite evaluation at coordinate {j}")
        g[j] = (fp - fm) / (2 * step)
    return g


def _irf_gradient(b: np.ndarray, h: int) -> np.ndarray:
    # d(A^h)/d b_j = sum_{i<h} A^i E_{1j} A^{h-1-i}, with E_{1j} = e1 e_j'
    if h == 0:
        return np.zeros_like(b)
    pw = _powers(companion(b), h - 1)
    lead = np.array([P[0, 0] for P in pw])  # e1' A^i e1
    tails = np.array([P[:, 0] for P in pw])  # A^i e1, row i
    return lead @ tails[::-1]


def focus_gradient(fs: FocusSpec, beta1) -> np.ndarray:
    b = np.asarray(beta1, dtype=float).reshape(-1)
    _check_dim(fs, b)
    if fs.kind == "linear":
        return np.array(fs.coeffs, dtype=float)
    if fs.kind == "irf":
        return _irf_gradient(b, fs.horizon)
    if fs.gradient is not None:
        return np.asarray(fs.gradient(b), dtype=float).reshape(-1)
    step = 1e-6 * max(1.0, float(np.max(np.abs(b))))
    return finite_diff_gradient(fs.evaluator, b, step)
