"""Prior-based WALS: posterior-mean shrinkage weights under a Normal location model.

For t ~ N(eta, 1) and a symmetric prior pi, the posterior mean is
m(t) = t + p'(t)/p(t) and the implied weight on beta2_hat is m(t)/t.
Folding the integrals onto eta >= 0,

    m(t)/t = int eta^2 pi(eta) e^{-eta^2/2} sinhc(t eta) d eta
             / int pi(eta) e^{-eta^2/2} cosh(t eta) d eta,

with sinhc(x) = sinh(x)/x. Every integrand is positive, so both integrals
are accumulated in log space and nothing cancels as t -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .errors import ConfigError, NumericError
from .estimators import CoreEstimates, wals_beta1
from .ortho import OrthoTransform

PRIOR_KINDS = ("laplace", "cauchy", "pareto", "weibull")
DEFAULT_PARAMS = {
    "laplace": {"c": math.log(2.0)},
    "cauchy": {},
    "pareto": {"a": 0.0862, "c": 0.0676},
    "weibull": {"b": 0.8876, "c": math.log(2.0)},
}
T_FLOOR = 1e-10
QUAD_NODES = 401
QUAD_HALF_WIDTH = 20.0


@dataclass(frozen=True)
class PriorSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in PRIOR_KINDS:
            raise ConfigError(f"unknown prior {self.kind!r}; choose from {PRIOR_KINDS}")
        merged = dict(DEFAULT_PARAMS[kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {kind} prior")
        merged.update(self.params)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", merged)

    def log_density(self, eta) -> np.ndarray:
        """log pi(eta) for the symmetric prior density."""
        x = np.abs(np.asarray(eta, dtype=float))
        p = self.params
        if self.kind == "laplace":
            c = p["c"]
            return np.log(c / 2) - c * x
        if self.kind == "cauchy":
            return -np.log(np.pi) - np.log1p(x * x)
        if self.kind == "pareto":
            a, c = p["a"], p["c"]
            return np.log(c * (1 - a) / (2 * a)) - np.log1p(c * x) / a
        b, c = p["b"], p["c"]
        with np.errstate(divide="ignore"):
            return np.log(b * c / 2) + (b - 1) * np.log(x) - c * x ** b


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _log_sinhc(x):
    x = np.asarray(x, dtype=float)
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    big = xs + np.log1p(-np.exp(-2 * xs)) - np.log(2.0) - np.log(xs)
    return np.where(small, x * x / 6.0, big)


def _log_cosh(x):
    x = np.asarray(x, dtype=float)
    return x + np.log1p(np.exp(-2 * x)) - np.log(2.0)


def _nodes(prior: PriorSpec, upper: float, n: int):
    """Quadrature nodes eta on [0, upper] with log(pi(eta) * d eta) weights."""
    x, w = _gauss_legendre(n)
    if prior.kind == "weibull":
        # u = eta^b turns the Weibull measure into (c/2) e^{-c u} du,
        # removing the integrable singularity at eta = 0
        b, c = prior.params["b"], prior.params["c"]
        U = upper ** b
        u = 0.5 * U * (x + 1.0)
        eta = u ** (1.0 / b)
        log_measure = np.log(c / 2) - c * u + np.log(0.5 * U * w)
        return eta, log_measure
    eta = 0.5 * upper * (x + 1.0)
    return eta, prior.log_density(eta) + np.log(0.5 * upper * w)


def posterior_mean_ratio(t: float, prior: PriorSpec, n: int = QUAD_NODES,
                         half_width: float = QUAD_HALF_WIDTH) -> float:
    """m(t)/t by Gauss-Legendre quadrature over eta in [0, |t| + half_width]."""
    t = abs(float(t))
    t = max(t, T_FLOOR)
    eta, log_mu = _nodes(prior, t + half_width, n)
    base = log_mu - 0.5 * eta * eta
    log_num = logsumexp(base + 2 * np.log(eta) + _log_sinhc(t * eta))
    log_den = logsumexp(base + _log_cosh(t * eta))
    if not (np.isfinite(log_num) and np.isfinite(log_den)):
        raise NumericError(f"posterior quadrature underflowed at t={t}")
    return float(np.exp(log_num - log_den))


def laplace_weight_closed_form(t: float, c: float = math.log(2.0)) -> float:
    """1 - (c/t) h(t) with h the ratio of Gaussian-tail terms, in log space."""
    t = abs(float(t))
    t = max(t, T_FLOOR)
    l1 = -c * t + log_ndtr(t - c)
    l2 = c * t + log_ndtr(-t - c)
    h = math.tanh(0.5 * (l1 - l2))
    return 1.0 - (c / t) * h


def prior_weight(t: float, prior: PriorSpec, method: str = "auto") -> float:
    """Shrinkage weight omega(t) = m(t)/t implied by the prior.

    ``method`` is ``"auto"`` (closed form for Laplace, quadrature otherwise),
    ``"closed"`` or ``"quadrature"``.
    """
    if method == "auto":
        method = "closed" if prior.kind == "laplace" else "quadrature"
    if method == "closed":
        if prior.kind != "laplace":
            raise ConfigError("closed-form weight only exists for the Laplace prior")
        return laplace_weight_closed_form(t, prior.params["c"])
    if method == "quadrature":
        return posterior_mean_ratio(t, prior)
    raise ConfigError(f"unknown method {method!r}")


def posterior_mean(t: float, prior: PriorSpec, method: str = "auto") -> float:
    """m(t), odd in t."""
    ts = math.copysign(max(abs(t), T_FLOOR), t) if t != 0 else T_FLOOR
    return ts * prior_weight(ts, prior, method)


@dataclass(frozen=True)
class PriorEstimate:
    beta2_shrunk: np.ndarray
    beta1: np.ndarray
    omega_raw: np.ndarray
    omega: np.ndarray
    t: np.ndarray


def wals_prior_estimate(ce: CoreEstimates, ot: OrthoTransform, prior: PriorSpec,
                        sigma=None) -> PriorEstimate:
    """Shrink each semi-orthogonal coefficient by its posterior-mean weight.

    The scale defaults to sqrt(sigma2_hat / N), the sampling standard
    deviation of every beta2_hat coordinate under homoskedasticity.
    """
    if sigma is None:
        sigma = np.full(ce.beta2_hat.size, math.sqrt(ce.sigma2_hat / ce.N))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), ce.beta2_hat.shape)
    t = ce.beta2_hat / sigma
    omega_raw = np.array([prior_weight(tj, prior) for tj in t])
    omega = np.clip(omega_raw, 0.0, 1.0)
    return PriorEstimate(
        beta2_shrunk=ce.beta2_hat * omega_raw,
        beta1=wals_beta1(ce, ot, omega),
        omega_raw=omega_raw,
        omega=omega,
        t=t,
    )
