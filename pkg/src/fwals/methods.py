"""Named estimation methods sharing one fitted context per dataset."""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Optional

import numpy as np

from . import amse as _amse
from .errors import ConfigError
from .estimators import CoreEstimates, fit_core, submodel_beta1_all, wals_beta1
from .focus import FocusSpec, eval_focus
from .model import Dataset, submodel_masks
from .ortho import OrthoTransform, semi_orthogonalize
from .priors import PriorSpec, wals_prior_estimate
from .weights import (
    FIC_MAX_K2,
    fic_weights,
    minimize_box,
    minimize_sum_to_one,
    saic_sbic_weights,
    submodel_risk,
)


@dataclass(frozen=True)
class EstimateResult:
    method: str
    weights: np.ndarray
    weight_kind: str  # box | simplex | signed | shrinkage | none
    beta1: np.ndarray
    mu: float
    amse: Optional[float] = None
    seconds: float = 0.0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "weight_kind": self.weight_kind,
            "weights": [float(x) for x in self.weights],
            "beta1": [float(x) for x in self.beta1],
            "mu": float(self.mu),
            "amse": None if self.amse is None else float(self.amse),
            "seconds": float(self.seconds),
            "converged": bool(self.converged),
        }


class FitContext:
    """Lazily computed pieces shared by all methods on one (dataset, focus) pair."""

    def __init__(self, ds: Dataset, fs: FocusSpec, omega_mode: str = "homoskedastic",
                 seed: int = 0):
        self.ds = ds
        self.fs = fs
        self.omega_mode = omega_mode
        self.seed = seed

    @cached_property
    def ot(self) -> OrthoTransform:
        return semi_orthogonalize(self.ds)

    @cached_property
    def ce(self) -> CoreEstimates:
        return fit_core(self.ds, self.ot)

    @cached_property
    def ac(self) -> _amse.AsymptoticComponents:
        return _amse.build_components(self.ds, self.ot, self.ce, self.fs, self.omega_mode)

    @cached_property
    def masks(self) -> np.ndarray:
        return submodel_masks(self.ds.k2, FIC_MAX_K2)

    @cached_property
    def submodel_beta1(self) -> np.ndarray:
        return submodel_beta1_all(self.ce, self.ot, self.masks)

    def with_focus(self, fs: FocusSpec) -> "FitContext":
        """New context for another focus, reusing the focus-free pieces."""
        other = FitContext(self.ds, fs, self.omega_mode, self.seed)
        for key in ("ot", "ce", "masks"):
            if key in self.__dict__:
                other.__dict__[key] = self.__dict__[key]
        return other

    def risk(self, basis: str):
        key = f"_risk_{basis}"
        if key not in self.__dict__:
            self.__dict__[key] = submodel_risk(self.ds, self.ot, self.ce, self.fs, self.ac,
                                               basis, self.omega_mode)
        return self.__dict__[key]


def _fwals(ctx: FitContext) -> EstimateResult:
    q = _amse.as_quadratic(ctx.ac)
    sol = minimize_box(q, seed=ctx.seed)
    b1 = wals_beta1(ctx.ce, ctx.ot, sol.w)
    return EstimateResult("fwals", sol.w, "box", b1, eval_focus(ctx.fs, b1), sol.objective,
                          converged=sol.converged)


def _fic(basis: str, name: str):
    def run(ctx: FitContext) -> EstimateResult:
        res = fic_weights(ctx.ds, ctx.ot, ctx.ce, ctx.fs, ctx.ac, basis, ctx.omega_mode)
        b1 = res.weights @ _submodel_beta1(ctx, basis)
        return EstimateResult(name, res.weights, "simplex", b1, res.mu, res.objective,
                              converged=res.converged)
    return run


def _mmse(basis: str, name: str):
    def run(ctx: FitContext) -> EstimateResult:
        risk = ctx.risk(basis)
        w = minimize_sum_to_one(risk.G)
        b1 = w @ _submodel_beta1(ctx, basis)
        return EstimateResult(name, w, "signed", b1, float(w @ risk.mu), float(w @ risk.G @ w))
    return run


def _submodel_beta1(ctx: FitContext, basis: str) -> np.ndarray:
    if basis == "orthogonal":
        return ctx.submodel_beta1
    ds = ctx.ds
    out = np.empty((ctx.masks.shape[0], ds.k1))
    for i, mask in enumerate(ctx.masks):
        Z = np.hstack([ds.X1, ds.X2[:, mask]])
        out[i] = np.linalg.lstsq(Z, ds.y, rcond=None)[0][: ds.k1]
    return out


def _ic(kind: str, name: str):
    def run(ctx: FitContext) -> EstimateResult:
        w = saic_sbic_weights(ctx.ds, ctx.masks, kind, "orthogonal", ctx.ot, ctx.ce)
        B = ctx.submodel_beta1
        if ctx.fs.is_linear:
            mu = float(w @ (B @ ctx.fs.coeffs))
        else:
            mu = float(sum(wi * eval_focus(ctx.fs, b) for wi, b in zip(w, B)))
        return EstimateResult(name, w, "simplex", w @ B, mu)
    return run


def _prior(kind: str, name: str):
    prior = PriorSpec(kind)

    def run(ctx: FitContext) -> EstimateResult:
        pe = wals_prior_estimate(ctx.ce, ctx.ot, prior)
        return EstimateResult(name, pe.omega, "shrinkage", pe.beta1, eval_focus(ctx.fs, pe.beta1))
    return run


def _fixed(which: str):
    def run(ctx: FitContext) -> EstimateResult:
        k2 = ctx.ds.k2
        w = np.ones(k2) if which == "full" else np.zeros(k2)
        b1 = ctx.ce.beta1_full if which == "full" else ctx.ce.beta1_narrow
        return EstimateResult(which, w, "box", b1, eval_focus(ctx.fs, b1),
                              _amse.amse_objective(ctx.ac, w))
    return run


METHODS: Dict[str, Callable[[FitContext], EstimateResult]] = {
    "fwals": _fwals,
    "fic": _fic("orthogonal", "fic"),
    "fic_orig": _fic("original", "fic_orig"),
    "mmse": _mmse("orthogonal", "mmse"),
    "mmse_orig": _mmse("original", "mmse_orig"),
    "saic": _ic("AIC", "saic"),
    "sbic": _ic("BIC", "sbic"),
    "wals_lap": _prior("laplace", "wals_lap"),
    "wals_cau": _prior("cauchy", "wals_cau"),
    "wals_par": _prior("pareto", "wals_par"),
    "wals_wei": _prior("weibull", "wals_wei"),
    "narrow": _fixed("narrow"),
    "full": _fixed("full"),
}


def parse_methods(text) -> list:
    names = [m.strip().lower() for m in (text.split(",") if isinstance(text, str) else text)]
    names = [m for m in names if m]
    if not names:
        raise ConfigError("no methods given")
    for m in names:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    return names


def run_method(name: str, ctx: FitContext) -> EstimateResult:
    if name not in METHODS:
        raise ConfigError(f"unknown method {name!r}")
    t0 = time.perf_counter()
    res = METHODS[name](ctx)
    elapsed = time.perf_counter() - t0
    return EstimateResult(res.method, res.weights, res.weight_kind, res.beta1, res.mu, res.amse,
                          elapsed, res.converged)


def estimate(ds: Dataset, fs: FocusSpec, method: str = "fwals",
             omega_mode: str = "homoskedastic", seed: int = 0) -> EstimateResult:
    """Fit one method from scratch; the reported time covers the whole fit."""
    t0 = time.perf_counter()
    res = run_method(method, FitContext(ds, fs, omega_mode, seed))
    elapsed = time.perf_counter() - t0
    return EstimateResult(res.method, res.weights, res.weight_kind, res.beta1, res.mu, res.amse,
                          elapsed, res.converged)
