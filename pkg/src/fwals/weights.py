"""Weight selection: FWALS box minimization and the sub-model competitors."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .amse import AmseQuadratic, AsymptoticComponents, estimate_omega
from .errors import CapacityError, ConfigError, NumericError
from .estimators import CoreEstimates, submodel_beta1_all
from .focus import FocusSpec, eval_focus_rows
from .model import Dataset, submodel_masks
from .ortho import OrthoTransform, residual_maker_apply

FIC_MAX_K2 = 14
VERTEX_CHECK_MAX_K2 = 14
FACE_ENUM_MAX_K2 = 6
BASES = ("orthogonal", "original")


class ConvergenceWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Box-constrained quadratic
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxSolution:
    w: np.ndarray
    objective: float
    converged: bool
    sweeps: int


def _coordinate_descent(A, b, w, tol, max_sweeps):
    """Exact cyclic coordinate minimization of w'Aw + 2b'w on [0, 1]^k.

    Each 1-D problem a w_j^2 + 2 g w_j is solved exactly: clipped
    stationary point when a > 0, best endpoint otherwise.
    """
    k = w.size
    w = w.copy()
    Aw = A @ w
    diag = np.diag(A)
    for sweep in range(1, max_sweeps + 1):
        moved = 0.0
        for j in range(k):
            a = diag[j]
            g = b[j] + Aw[j] - a * w[j]
            if a > 0:
                new = min(1.0, max(0.0, -g / a))
            else:
                f1 = a + 2 * g
                new = 1.0 if f1 < 0 else (0.0 if f1 > 0 else w[j])
            step = new - w[j]
            if step != 0.0:
                Aw += A[:, j] * step
                w[j] = new
                moved = max(moved, abs(step))
        if moved <= tol:
            return w, True, sweep
        if sweep % 64 == 0:
            Aw = A @ w
    return w, False, max_sweeps


def _face_candidates(q: AmseQuadratic):
    """Stationary points of every face of the box (3^k faces)."""
    k = q.b.size
    out = []
    for code in itertools.product((0, 1, 2), repeat=k):
        code = np.array(code)
        free = code == 2
        w = np.where(code == 1, 1.0, 0.0)
        if free.any():
            Aff = q.A[np.ix_(free, free)]
            rhs = -(q.b[free] + q.A[np.ix_(free, ~free)] @ w[~free])
            try:
                sol = np.linalg.solve(Aff, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(sol < 0) or np.any(sol > 1):
                continue
            w[free] = sol
        out.append(w)
    return np.array(out)


def minimize_box(q: AmseQuadratic, seed: int = 0, n_random: int = 8, tol: float = 1e-10,
                 max_sweeps: int = 10_000) -> BoxSolution:
    """Minimize w'Aw + 2b'w + c0 over [0, 1]^k, A possibly indefinite.

    Multistart coordinate descent from 0, 1, the midpoint, ``n_random``
    seeded uniform points and the best box vertex. Vertices are checked
    exhaustively for k <= 14, and for k <= 6 every face stationary point
    is checked too, which makes the result a global minimum there.
    """
    A = np.asarray(q.A, dtype=float)
    b = np.asarray(q.b, dtype=float)
    k = b.size
    rng = np.random.default_rng(seed)
    starts = [np.zeros(k), np.ones(k), np.full(k, 0.5)]
    starts += list(rng.uniform(size=(n_random, k)))

    cands, vals = [], []
    if k <= VERTEX_CHECK_MAX_K2:
        verts = submodel_masks(k, VERTEX_CHECK_MAX_K2).astype(float)
        vv = q.batch(verts)
        i = int(np.argmin(vv))
        starts.append(verts[i])
        cands.append(verts[i])
        vals.append(float(vv[i]))
    if k <= FACE_ENUM_MAX_K2:
        faces = _face_candidates(q)
        if len(faces):
            fv = q.batch(faces)
            i = int(np.argmin(fv))
            starts.append(faces[i])
            cands.append(faces[i])
            vals.append(float(fv[i]))

    all_converged = True
    total_sweeps = 0
    for s in starts:
        w, ok, sweeps = _coordinate_descent(A, b, s, tol, max_sweeps)
        all_converged &= ok
        total_sweeps += sweeps
        cands.append(w)
        vals.append(q(w))
    i = int(np.argmin(vals))
    if not all_converged:
        warnings.warn("box coordinate descent hit the sweep cap", ConvergenceWarning, stacklevel=2)
    return BoxSolution(np.clip(cands[i], 0.0, 1.0), float(vals[i]), all_converged, total_sweeps)


# --------------------------------------------------------------------------
# Simplex and sum-to-one problems
# --------------------------------------------------------------------------

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class SimplexSolution:
    w: np.ndarray
    objective: float
    converged: bool
    iterations: int


def _simplex_residual(G, w, L):
    """Projected-gradient stationarity measure; zero exactly at KKT points."""
    return float(np.max(np.abs(w - project_simplex(w - (G @ w) / L))))


def _face_stationary(G, w, S):
    """Stationary point of w'Gw on {sum w = 1, w_j = 0 off S} (least-norm if singular)."""
    m = int(S.sum())
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = 2 * G[np.ix_(S, S)]
    K[:m, m] = 1.0
    K[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    c = np.zeros_like(w)
    c[S] = np.linalg.lstsq(K, rhs, rcond=1e-12)[0][:m]
    return c


def _active_set_refine(G, w, f, L, tol, max_steps):
    """Descend along faces of the simplex, dropping a coordinate at each bound hit.

    At each step the face stationary point c is accepted if it is feasible,
    no worse and first-order optimal on the whole simplex. Otherwise w moves
    along +-(c - w), whichever descends, to the 1-D minimizer or the first
    bound. On indefinite faces this leaves saddles in a few steps where
    projected gradient would creep. Returns (w, f, converged).
    """
    for _ in range(max_steps):
        S = w > 1e-12 * np.max(w)
        c = _face_stationary(G, w, S)
        if np.all(c >= 0):
            c = c / c.sum()
            fc = c @ G @ c
            if fc <= f + 1e-14 * max(1.0, abs(f)) and _simplex_residual(G, c, L) <= tol:
                return c, fc, True
        d = c - w
        d[S] -= d.sum() / S.sum()
        slope = 2 * (G @ w) @ d
        if slope > 0:
            d, slope = -d, -slope
        curv = d @ G @ d
        neg = d < 0
        if not neg.any() or (slope > -1e-300 and curv >= 0):
            break
        ratios = -w[neg] / d[neg]
        t_max = float(ratios.min())
        t = t_max if curv <= 0 else min(t_max, -slope / (2 * curv))
        w_new = w + t * d
        if t == t_max:
            w_new[np.flatnonzero(neg)[np.argmin(ratios)]] = 0.0
        w_new = np.maximum(w_new, 0.0)
        w_new /= w_new.sum()
        f_new = w_new @ G @ w_new
        if not f_new < f:
            break
        w, f = w_new, f_new
    return w, f, False


def _pg_simplex(G, w, L, tol, max_iter, refine_every=25):
    # projected gradient on f = w'Gw with Armijo backtracking along the
    # projection arc; the trial step doubles after every accepted step so
    # directions of negative curvature are left quickly
    f = w @ G @ w
    g = 2 * (G @ w)
    step = 0.5 / L
    for it in range(1, max_iter + 1):
        step *= 2.0
        while True:
            w_new = project_simplex(w - step * g)
            d = w_new - w
            f_new = w_new @ G @ w_new
            if f_new <= f + g @ d + (d @ d) / (2 * step) or step <= 0.5 / L:
                break
            step *= 0.5
        w, f = w_new, f_new
        g = 2 * (G @ w)
        if np.max(np.abs(d)) <= tol and _simplex_residual(G, w, L) <= tol:
            return w, f, True, it
        if it % refine_every == 0:
            w, f, done = _active_set_refine(G, w, f, L, tol, w.size)
            if done:
                return w, f, True, it
            g = 2 * (G @ w)
    return w, f, False, max_iter


def minimize_simplex(G: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000,
                     max_vertex_starts: int = 8) -> SimplexSolution:
    """Minimize w'Gw over the unit simplex.

    Starts from the barycenter and from the vertices with the smallest
    diagonal entries (all vertices when M <= max_vertex_starts).
    """
    G = 0.5 * (np.asarray(G, dtype=float) + np.asarray(G, dtype=float).T)
    m = G.shape[0]
    L = max(float(np.linalg.norm(G, 2)), 1e-300)
    starts = [np.full(m, 1.0 / m)]
    order = np.argsort(np.diag(G), kind="stable")[:max_vertex_starts]
    for i in order:
        e = np.zeros(m)
        e[i] = 1.0
        starts.append(e)
    best = None
    all_ok, total = True, 0
    for s in starts:
        w, f, ok, it = _pg_simplex(G, s, L, tol, max_iter)
        all_ok &= ok
        total += it
        if best is None or f < best[1]:
            best = (w, f)
    if not all_ok:
        warnings.warn("simplex projected gradient hit the iteration cap", ConvergenceWarning,
                      stacklevel=2)
    return SimplexSolution(best[0], float(best[1]), all_ok, total)


def minimize_sum_to_one(G: np.ndarray) -> np.ndarray:
    """Stationary point of w'Gw subject to 1'w = 1 (weights may be negative).

    Solves the KKT system [2G 1; 1' 0][w; lam] = [0; 1] by least squares.
    When the system is singular this is its least-norm solution; when it
    is also inconsistent (the constrained problem is unbounded below, as
    happens for indefinite plug-in risk matrices) it is the least-norm
    least-squares point, shifted so the weights sum to one.
    """
    G = 0.5 * (np.asarray(G, dtype=float) + np.asarray(G, dtype=float).T)
    m = G.shape[0]
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = 2 * G
    K[:m, m] = 1.0
    K[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    # drop directions below 1e-12 relative: risk matrices are often low rank
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=1e-12)
    w = sol[:m]
    if not np.all(np.isfinite(w)):
        raise NumericError("sum-to-one KKT solve produced non-finite weights")
    return w + (1.0 - w.sum()) / m


def mmse_weights(bias, cov) -> np.ndarray:
    """Minimize w'(b b' + Cov)w subject only to sum(w) = 1."""
    bias = np.asarray(bias, dtype=float).reshape(-1)
    return minimize_sum_to_one(np.outer(bias, bias) + np.asarray(cov, dtype=float))


# --------------------------------------------------------------------------
# Sub-model risk matrix (FIC / mMSE)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SubmodelRisk:
    """Joint plug-in AMSE of the sub-model focus estimates.

    ``G[m, m']`` is the (bias-corrected) product of asymptotic biases plus
    the asymptotic covariance of sub-models m and m'. ``mu`` holds the
    sub-model focus estimates.
    """

    G: np.ndarray
    mu: np.ndarray
    masks: np.ndarray
    basis: str


def _risk_orthogonal(ce, ot, ac, fs, masks):
    S = masks.astype(float)
    g = ac.v  # C' Xi' D
    K = ac.C_inv @ ac.delta_outer_corrected @ ac.C_inv.T
    Z = (1.0 - S) * g[None, :]
    a = ac.H @ ac.Q11_inv @ ac.D_hat
    L = a[None, :] - (S * g[None, :]) @ ac.B_hat
    G = Z @ K @ Z.T + L @ ac.Omega_hat @ L.T
    mu = eval_focus_rows(fs, submodel_beta1_all(ce, ot, S))
    return G, mu


def _risk_original(ds, ce, ac, fs, masks, omega_mode):
    n, k1, k2 = ds.N, ds.k1, ds.k2
    X = ds.X
    Q = X.T @ X / n
    Xy = X.T @ ds.y / n
    Q_inv = np.linalg.inv(Q)
    beta_full = Q_inv @ Xy
    resid = ds.y - X @ beta_full
    Omega = estimate_omega(ds, resid, omega_mode, sigma2=ce.sigma2_hat)
    delta = np.sqrt(n) * beta_full[k1:]
    var_delta = (Q_inv @ Omega @ Q_inv)[k1:, k1:]
    Dlt = np.outer(delta, delta) - var_delta
    D = ac.D_hat
    HD = np.concatenate([D, np.zeros(k2)])
    m_count = masks.shape[0]
    R = np.empty((m_count, k2))
    Lmat = np.empty((m_count, k1 + k2))
    B1 = np.empty((m_count, k1))
    for i, mask in enumerate(masks):
        idx = np.concatenate([np.arange(k1), k1 + np.flatnonzero(mask)])
        Qm_inv = np.linalg.inv(Q[np.ix_(idx, idx)])
        Pm = np.zeros((k1 + k2, k1 + k2))
        Pm[np.ix_(idx, idx)] = Qm_inv
        row = (HD @ Pm @ Q)[k1:]
        R[i] = row * (~mask)
        Lmat[i] = Pm @ HD
        B1[i] = (Qm_inv @ Xy[idx])[:k1]
    G = R @ Dlt @ R.T + Lmat @ Omega @ Lmat.T
    mu = eval_focus_rows(fs, B1)
    return G, mu


def submodel_risk(ds: Dataset, ot: OrthoTransform, ce: CoreEstimates, fs: FocusSpec,
                  ac: AsymptoticComponents, basis: str = "orthogonal",
                  omega_mode: str = "homoskedastic", cap: int = FIC_MAX_K2) -> SubmodelRisk:
    """Build the joint sub-model AMSE matrix by full enumeration.

    ``orthogonal`` sub-models drop columns of the semi-orthogonal block
    X2*; ``original`` sub-models drop columns of X2 itself and are refit
    one by one.
    """
    if ds.k2 > cap:
        raise CapacityError(f"k2={ds.k2} exceeds the sub-model enumeration cap {cap}")
    masks = submodel_masks(ds.k2, cap)
    if basis == "orthogonal":
        G, mu = _risk_orthogonal(ce, ot, ac, fs, masks)
    elif basis == "original":
        G, mu = _risk_original(ds, ce, ac, fs, masks, omega_mode)
    else:
        raise ConfigError(f"unknown sub-model basis {basis!r}; choose from {BASES}")
    return SubmodelRisk(0.5 * (G + G.T), mu, masks, basis)


@dataclass(frozen=True)
class FicResult:
    weights: np.ndarray
    mu_submodels: np.ndarray
    mu: float
    objective: float
    converged: bool
    risk: SubmodelRisk


def fic_weights(ds, ot, ce, fs, ac, basis: str = "orthogonal",
                omega_mode: str = "homoskedastic", cap: int = FIC_MAX_K2) -> FicResult:
    """Simplex weights over all 2^k2 sub-models minimizing the joint plug-in AMSE."""
    risk = submodel_risk(ds, ot, ce, fs, ac, basis, omega_mode, cap)
    sol = minimize_simplex(risk.G)
    return FicResult(sol.w, risk.mu, float(sol.w @ risk.mu), sol.objective, sol.converged, risk)


# --------------------------------------------------------------------------
# Smoothed information criteria
# --------------------------------------------------------------------------

def information_criterion(rss, n: int, k1: int, k2m, kind: str) -> np.ndarray:
    rss = np.asarray(rss, dtype=float)
    k2m = np.asarray(k2m, dtype=float)
    kind = kind.upper()
    if kind == "AIC":
        pen = 2.0
    elif kind == "BIC":
        pen = np.log(n)
    else:
        raise ConfigError(f"unknown information criterion {kind!r}")
    return n * np.log(rss / n) + pen * (k1 + k2m)


def ic_weights(ic) -> np.ndarray:
    """exp(-IC/2) normalized, computed after subtracting the minimum IC."""
    ic = np.asarray(ic, dtype=float)
    z = np.exp(-(ic - ic.min()) / 2.0)
    return z / z.sum()


def submodel_rss(ds: Dataset, masks: np.ndarray, basis: str = "orthogonal",
                 ot: Optional[OrthoTransform] = None,
                 ce: Optional[CoreEstimates] = None) -> np.ndarray:
    if basis == "orthogonal":
        if ot is None or ce is None:
            raise ConfigError("orthogonal sub-model RSS needs the transform and core fit")
        # columns of M1 X2* are mutually orthogonal with squared norm N
        return ce.rss_narrow - ds.N * (masks.astype(float) @ (ce.beta2_hat ** 2))
    if basis == "original":
        M1y = residual_maker_apply(ds.X1, ds.y)
        M1X2 = residual_maker_apply(ds.X1, ds.X2)
        out = np.empty(masks.shape[0])
        for i, mask in enumerate(masks):
            Z = M1X2[:, mask]
            r = M1y - Z @ np.linalg.lstsq(Z, M1y, rcond=None)[0] if mask.any() else M1y
            out[i] = r @ r
        return out
    raise ConfigError(f"unknown sub-model basis {basis!r}")


def saic_sbic_weights(ds: Dataset, masks: np.ndarray, kind: str, basis: str = "orthogonal",
                      ot: Optional[OrthoTransform] = None,
                      ce: Optional[CoreEstimates] = None) -> np.ndarray:
    rss = submodel_rss(ds, masks, basis, ot, ce)
    ic = information_criterion(rss, ds.N, ds.k1, masks.sum(axis=1), kind)
    return ic_weights(ic)


def scalar_optimal_weight(delta_over_sigma: float) -> float:
    """AMSE-optimal weight r^2 / (r^2 + 1) for shrinking a scalar OLS toward zero."""
    r2 = float(delta_over_sigma) ** 2
    return r2 / (r2 + 1.0)
