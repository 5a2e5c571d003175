"""Monte Carlo designs and the replication driver for focus risk comparisons."""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, FwalsError
from .focus import FocusSpec, companion, eval_focus, irf, linear
from .methods import FitContext, parse_methods, run_method
from .model import Dataset


def equicorrelation(k: int, tau: float) -> np.ndarray:
    """k x k matrix with unit diagonal and tau off the diagonal."""
    S = np.full((k, k), float(tau))
    np.fill_diagonal(S, 1.0)
    return S


def _check_tau(k: int, tau: float) -> None:
    lo = -1.0 / (k - 1) if k > 1 else -np.inf
    if not (lo < tau < 1.0):
        raise ConfigError(f"tau={tau} makes the {k}x{k} equicorrelation matrix singular; "
                          f"need {lo:.4g} < tau < 1")


def _cholesky(S: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise ConfigError("regressor covariance is not positive definite") from None


# --------------------------------------------------------------------------
# Basic design: equicorrelated Gaussian regressors, declining auxiliary slopes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BasicDesignConfig:
    N: int
    k2: int
    tau: float
    r2: float
    k1: int = 3
    a: float = 12.0
    seed: int = 0

    def __post_init__(self):
        if self.N <= self.k1 + self.k2:
            raise ConfigError(f"N={self.N} must exceed k1 + k2 = {self.k1 + self.k2}")
        if self.k1 < 1 or self.k2 < 1:
            raise ConfigError("k1 and k2 must be at least 1")
        if not 0.0 < self.r2 < 1.0:
            raise ConfigError(f"r2 must lie in (0, 1), got {self.r2}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ConfigError(f"a must be positive, got {self.a}")
        _check_tau(self.k1 + self.k2, self.tau)

    @property
    def params(self) -> dict:
        return {"N": self.N, "k1": self.k1, "k2": self.k2, "tau": self.tau, "r2": self.r2,
                "a": self.a}

    def sigma_x(self) -> np.ndarray:
        return equicorrelation(self.k1 + self.k2, self.tau)


def basic_coefficients(cfg: BasicDesignConfig, cx: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    beta1 = np.full(cfg.k1, cx / cfg.a)
    beta2 = cx * (cfg.k2 - np.arange(cfg.k2)) / cfg.k2
    return beta1, beta2


def population_r2(cfg: BasicDesignConfig, cx: float) -> float:
    beta = np.concatenate(basic_coefficients(cfg, cx))
    signal = float(beta @ cfg.sigma_x() @ beta)
    return signal / (signal + 1.0)


def solve_cx(cfg: BasicDesignConfig) -> float:
    """Scale c_x giving population R^2 = beta' Sigma beta / (beta' Sigma beta + 1) = r2."""
    beta = np.concatenate(basic_coefficients(cfg, 1.0))
    q = float(beta @ cfg.sigma_x() @ beta)
    return math.sqrt(cfg.r2 / (1.0 - cfg.r2) / q)


@dataclass(frozen=True)
class SimDraw:
    """One simulated dataset with the true coefficients and focus values."""

    dataset: Dataset
    beta1: np.ndarray
    beta2: np.ndarray
    foci: Tuple[FocusSpec, ...]
    mu_true: Tuple[float, ...]


def gen_basic(cfg: BasicDesignConfig, rng: Optional[np.random.Generator] = None) -> SimDraw:
    """Draw y = X1 beta1 + X2 beta2 + eps with x ~ N(0, Sigma_x), eps ~ N(0, 1).

    The focus is the sum of the core coefficients.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    cx = solve_cx(cfg)
    beta1, beta2 = basic_coefficients(cfg, cx)
    L = _cholesky(cfg.sigma_x())
    X = rng.standard_normal((cfg.N, cfg.k1 + cfg.k2)) @ L.T
    eps = rng.standard_normal(cfg.N)
    X1, X2 = X[:, : cfg.k1], X[:, cfg.k1:]
    y = X1 @ beta1 + X2 @ beta2 + eps
    fs = linear(np.ones(cfg.k1))
    return SimDraw(Dataset(y, X1, X2), beta1, beta2, (fs,), (eval_focus(fs, beta1),))


# --------------------------------------------------------------------------
# IRF design: AR(3) response with near-sparse exogenous AR(1) regressors
# --------------------------------------------------------------------------

IRF_LAGS = 3
AUX_AR = 0.2


@dataclass(frozen=True)
class IrfDesignConfig:
    k2: int
    c_y: float
    T: int = 100
    d: float = 1.0
    tau: float = 0.2
    burn_in: int = 100
    horizons: Tuple[int, ...] = (1, 3, 5, 7)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        if self.k2 < 1:
            raise ConfigError("k2 must be at least 1")
        if self.T <= IRF_LAGS + self.k2:
            raise ConfigError(f"T={self.T} must exceed {IRF_LAGS} + k2")
        if self.burn_in < IRF_LAGS:
            raise ConfigError(f"burn_in must be at least {IRF_LAGS} to fill the lag window")
        if not self.horizons or min(self.horizons) < 0:
            raise ConfigError("horizons must be a non-empty list of non-negative integers")
        _check_tau(self.k2, self.tau)
        rho = float(np.max(np.abs(np.linalg.eigvals(companion(self.beta1)))))
        if rho >= 1.0:
            raise ConfigError(f"AR coefficients are explosive (spectral radius {rho:.4f})")

    @property
    def beta1(self) -> np.ndarray:
        r = self.d / math.sqrt(self.T)
        return np.array([0.5, r, r / 2.0])

    @property
    def s(self) -> int:
        return self.k2 // 2

    @property
    def theta(self) -> np.ndarray:
        return np.where(np.arange(self.k2) < self.s, 1.0, 0.05)

    @property
    def beta2(self) -> np.ndarray:
        return self.c_y / math.sqrt(self.T) * self.theta

    def param_rows(self):
        for h in self.horizons:
            yield {"T": self.T, "k2": self.k2, "c_y": self.c_y, "d": self.d, "tau": self.tau,
                   "h": h}


def gen_irf(cfg: IrfDesignConfig, rng: Optional[np.random.Generator] = None) -> SimDraw:
    """Simulate burn_in + T periods from zero initial conditions and keep the last T.

    X1 holds the three lags of y, X2 the contemporaneous auxiliary regressors.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n_total = cfg.burn_in + cfg.T
    b1, b2 = cfg.beta1, cfg.beta2
    L = _cholesky(equicorrelation(cfg.k2, cfg.tau))
    ex = rng.standard_normal((n_total, cfg.k2)) @ L.T
    u = rng.standard_normal(n_total)
    x2 = np.zeros((n_total, cfg.k2))
    y = np.zeros(n_total + IRF_LAGS)  # first IRF_LAGS entries are the zero initial values
    prev = np.zeros(cfg.k2)
    for t in range(n_total):
        prev = AUX_AR * prev + ex[t]
        x2[t] = prev
        lags = y[t: t + IRF_LAGS][::-1]  # y_{t-1}, y_{t-2}, y_{t-3}
        y[t + IRF_LAGS] = b1 @ lags + prev @ b2 + u[t]
    keep = slice(cfg.burn_in, n_total)
    yy = y[IRF_LAGS:]
    X1 = np.column_stack([yy[cfg.burn_in - j: n_total - j] for j in range(1, IRF_LAGS + 1)])
    foci = tuple(irf(h) for h in cfg.horizons)
    mu = tuple(eval_focus(fs, b1) for fs in foci)
    return SimDraw(Dataset(yy[keep], X1, x2[keep]), b1, b2, foci, mu)


# --------------------------------------------------------------------------
# Replication driver
# --------------------------------------------------------------------------

Design = Union[BasicDesignConfig, IrfDesignConfig]


def _generate(design: Design, rng: np.random.Generator) -> SimDraw:
    if isinstance(design, BasicDesignConfig):
        return gen_basic(design, rng)
    if isinstance(design, IrfDesignConfig):
        return gen_irf(design, rng)
    raise ConfigError(f"unknown design {type(design).__name__}")


def _param_rows(design: Design):
    if isinstance(design, BasicDesignConfig):
        return [design.params]
    return list(design.param_rows())


def rep_rng(master_seed: int, rep: int) -> np.random.Generator:
    """Per-replication stream keyed on (master seed, replication index)."""
    return np.random.default_rng([int(master_seed), int(rep)])


def _one_replication(designs, methods, master_seed, rep):
    """Squared focus errors for every (design, focus, method); NaN marks a failure."""
    out = []
    for design in designs:
        # every design point restarts the same stream: common random numbers
        # across the grid, and adding points never shifts existing draws
        try:
            draw = _generate(design, rep_rng(master_seed, rep))
        except (FwalsError, np.linalg.LinAlgError, FloatingPointError):
            n_foci = len(_param_rows(design))
            out.append(np.full((n_foci, len(methods)), np.nan))
            continue
        errs = np.full((len(draw.foci), len(methods)), np.nan)
        base = None
        for i, (fs, mu_true) in enumerate(zip(draw.foci, draw.mu_true)):
            ctx = FitContext(draw.dataset, fs) if base is None else base.with_focus(fs)
            base = ctx
            for j, m in enumerate(methods):
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        res = run_method(m, ctx)
                    if np.isfinite(res.mu):
                        errs[i, j] = (res.mu - mu_true) ** 2
                except (FwalsError, np.linalg.LinAlgError, ArithmeticError, ValueError):
                    pass
        out.append(errs)
    return out


@dataclass
class RiskTable:
    """Risk mean((mu_hat - mu_true)^2) per method and design point."""

    param_names: Tuple[str, ...]
    rows: list = field(default_factory=list)

    COLUMNS_TAIL = ("risk", "mc_se", "reps", "n_failed")

    @property
    def columns(self) -> Tuple[str, ...]:
        return ("method",) + tuple(self.param_names) + self.COLUMNS_TAIL

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def lookup(self, method: str, **params) -> dict:
        for row in self.rows:
            if row["method"] == method and all(row[k] == v for k, v in params.items()):
                return row
        raise KeyError(f"no row for {method} at {params}")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    # repr is the shortest string that round-trips exactly
    return "" if math.isnan(v) else repr(v)


def run_monte_carlo(designs: Sequence[Design], methods, reps: int, seed: int = 0,
                    threads: int = 1) -> RiskTable:
    """Replicate every design point ``reps`` times and tabulate focus risk.

    Replication r draws from a stream keyed on (seed, r), and results are
    reduced in replication order, so the table does not depend on
    ``threads``. A method that raises on a replication is dropped from that
    cell only; ``n_failed`` counts the drops and an all-failed cell has an
    empty risk.
    """
    if reps < 2:
        raise ConfigError(f"reps must be at least 2, got {reps}")
    if threads < 1:
        raise ConfigError(f"threads must be at least 1, got {threads}")
    designs = list(designs)
    if not designs:
        raise ConfigError("no design points given")
    kinds = {type(d) for d in designs}
    if len(kinds) != 1:
        raise ConfigError("all design points must use the same design")
    methods = parse_methods(methods)

    def task(r):
        return _one_replication(designs, methods, seed, r)

    if threads == 1:
        results = [task(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(task, range(reps)))

    param_names = tuple(_param_rows(designs[0])[0])
    table = RiskTable(param_names)
    for di, design in enumerate(designs):
        stack = np.stack([res[di] for res in results])  # reps x foci x methods
        for fi, params in enumerate(_param_rows(design)):
            for mj, m in enumerate(methods):
                vals = stack[:, fi, mj]
                ok = vals[np.isfinite(vals)]
                n_ok = ok.size
                row = {"method": m, **params, "reps": n_ok, "n_failed": reps - n_ok}
                if n_ok:
                    row["risk"] = float(np.mean(ok))
                    row["mc_se"] = float(np.std(ok, ddof=1) / math.sqrt(n_ok)) if n_ok > 1 \
                        else float("nan")
                else:
                    row["risk"] = float("nan")
                    row["mc_se"] = float("nan")
                table.rows.append(row)
    return table
