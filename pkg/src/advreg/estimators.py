"""Estimators for (over)parameterized linear regression.

Closed forms where they exist (minimum-norm interpolation via a thresholded
SVD, ridge via its normal equations in primal or dual form), cyclic
coordinate descent for the l1-penalized fit, and a first-order method for the
adversarially-trained estimator, whose objective

    (1/n) sum_i (|y_i - x_i . b| + delta ||b||_q)^2,   q dual to the attack p,

is convex but nonsmooth.  That solver smooths both kinks, minimizes with a
backtracking gradient method under a decreasing smoothing schedule from
several starts (deterministic warm starts plus seeded random restarts), then
polishes with exact-objective subgradient steps and coordinate snapping.  A
closed-form certificate handles the exact-zero solution: 0 is optimal iff
||X^T y||_p <= delta ||y||_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from ._seeding import derive_rng
from .norms import INF, as_norm_order, dual_order, vector_norm

__all__ = [
    "BiasVarianceTerms",
    "Diagnostics",
    "FittedModel",
    "ProjectorDecomposition",
    "SolverError",
    "adv_train_fit",
    "adv_train_objective",
    "bias_variance_terms",
    "lasso_fit",
    "lasso_objective",
    "min_norm_fit",
    "projector_decomposition",
    "ridge_fit",
]


class SolverError(RuntimeError):
    """Iterative fit did not reach its tolerance; `best` holds the last iterate."""

    def __init__(self, message: str, best: Optional["FittedModel"] = None):
        super().__init__(message)
        self.best = best


@dataclass
class Diagnostics:
    objective: float
    residual: float
    iterations: int
    note: str = ""


@dataclass
class FittedModel:
    """A fitted linear predictor with its estimator tag and solver diagnostics."""

    beta_hat: np.ndarray
    estimator: str  # "min_norm" | "ridge" | "lasso" | "adv_train"
    diagnostics: Diagnostics
    delta: float = 0.0
    p: float | None = None  # attack order (adv_train only)

    def label(self) -> str:
        if self.estimator == "adv_train":
            from .norms import norm_order_label

            return f"adv_train_l{norm_order_label(self.p)}"
        return self.estimator


# ---------------------------------------------------------------------------
# SVD decomposition: projectors, pseudo-inverses, minimum-norm solutions
# ---------------------------------------------------------------------------


@dataclass
class ProjectorDecomposition:
    """Rank decisions and row-space geometry of a design matrix X (n x m).

    Holds the thresholded thin SVD X = U diag(s) V^T restricted to singular
    values above max(n, m) * eps * s_max; every derived object (projectors
    Phi/Pi, sample covariance Sigma_hat = X^T X / n and its pseudo-inverse)
    shares those rank decisions.  Dense matrices materialize lazily; the
    apply_* methods work in factored form for large m.
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray  # m x r, columns are right singular vectors
    n: int
    m: int

    @property
    def rank(self) -> int:
        return self.s.size

    def apply_phi(self, v: np.ndarray) -> np.ndarray:
        """Projection onto the row space of X."""
        return self.V @ (self.V.T @ v)

    def apply_pi(self, v: np.ndarray) -> np.ndarray:
        """Projection onto the null space of X."""
        return v - self.apply_phi(v)

    def min_norm_solution(self, y: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(self.m)
        return self.V @ ((self.U.T @ y) / self.s)

    def apply_sigma_hat_pinv(self, v: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.zeros_like(v)
        return self.V @ ((self.V.T @ v) * (self.n / self.s**2))

    def sigma_hat_pinv_eigenvalues(self) -> np.ndarray:
        """Nonzero eigenvalues n / s_i^2 of the pseudo-inverse, ascending."""
        return np.sort(self.n / self.s**2) if self.rank else np.zeros(0)

    def trace_sigma_hat_pinv(self) -> float:
        return float(np.sum(self.n / self.s**2)) if self.rank else 0.0

    @cached_property
    def Phi(self) -> np.ndarray:
        return self.V @ self.V.T

    @cached_property
    def Pi(self) -> np.ndarray:
        return np.eye(self.m) - self.Phi

    @cached_property
    def Sigma_hat(self) -> np.ndarray:
        return (self.V * (self.s**2 / self.n)) @ self.V.T

    @cached_property
    def Sigma_hat_pinv(self) -> np.ndarray:
        return (self.V * (self.n / self.s**2)) @ self.V.T if self.rank else np.zeros((self.m, self.m))


def projector_decomposition(X: np.ndarray) -> ProjectorDecomposition:
    """Thin SVD of X thresholded at max(n, m) * eps * s_max."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, m = X.shape
    if X.size == 0:
        raise ValueError("X must be nonempty")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size and s[0] > 0.0:
        cutoff = max(n, m) * np.finfo(float).eps * s[0]
        r = int(np.sum(s > cutoff))
    else:
        r = 0
    return ProjectorDecomposition(U[:, :r], s[:r], Vt[:r].T, n, m)


# ---------------------------------------------------------------------------
# minimum-norm and ridge
# ---------------------------------------------------------------------------


def min_norm_fit(X: np.ndarray, y: np.ndarray, *, decomposition: ProjectorDecomposition | None = None) -> FittedModel:
    """Least-squares solution of minimum l2 norm, beta = pinv(X) y."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_design(X, y)
    dec = decomposition if decomposition is not None else projector_decomposition(X)
    beta = dec.min_norm_solution(y)
    resid = y - X @ beta
    note = "rank-zero design; returning the zero predictor" if dec.rank == 0 else ""
    diag = Diagnostics(
        objective=float(resid @ resid) / X.shape[0],
        residual=_normal_eq_residual(X, y, resid),
        iterations=0,
        note=note,
    )
    return FittedModel(beta, "min_norm", diag)


def ridge_fit(X: np.ndarray, y: np.ndarray, delta: float) -> FittedModel:
    """Minimizer of (1/n)||y - X b||^2 + delta ||b||^2, i.e. (X^T X + n delta I) b = X^T y.

    delta = 0 falls back to the minimum-norm solution.  The m x m or n x n
    (dual) system is solved, whichever is smaller.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_design(X, y)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n, m = X.shape
    if delta == 0.0:
        fit = min_norm_fit(X, y)
        return FittedModel(fit.beta_hat, "ridge", fit.diagnostics, delta=0.0)
    if m <= n:
        beta = np.linalg.solve(X.T @ X + n * delta * np.eye(m), X.T @ y)
    else:
        beta = X.T @ np.linalg.solve(X @ X.T + n * delta * np.eye(n), y)
    resid = y - X @ beta
    grad = -2.0 / n * (X.T @ resid) + 2.0 * delta * beta  # objective gradient
    diag = Diagnostics(
        objective=float(resid @ resid) / n + delta * float(beta @ beta),
        residual=float(np.max(np.abs(grad))),
        iterations=0,
    )
    return FittedModel(beta, "ridge", diag, delta=float(delta))


def _check_design(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError(f"incompatible design/response shapes {X.shape} vs {y.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one observation")


def _normal_eq_residual(X: np.ndarray, y: np.ndarray, resid: np.ndarray) -> float:
    g = X.T @ resid  # normal-equation defect, zero at any least-squares solution
    return float(np.max(np.abs(g))) / max(1.0, float(np.max(np.abs(X.T @ y))))


# ---------------------------------------------------------------------------
# lasso: cyclic coordinate descent
# ---------------------------------------------------------------------------


def lasso_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, delta: float) -> float:
    resid = y - X @ beta
    return float(resid @ resid) / X.shape[0] + delta * float(np.sum(np.abs(beta)))


def _lasso_kkt_residual(X: np.ndarray, resid: np.ndarray, beta: np.ndarray, delta: float) -> float:
    """Max violation of the stationarity conditions of the l1 objective."""
    n = X.shape[0]
    g = 2.0 / n * (X.T @ resid)  # = -grad of the smooth part
    nonzero = beta != 0.0
    viol_zero = np.maximum(np.abs(g[~nonzero]) - delta, 0.0)
    viol_active = np.abs(g[nonzero] - delta * np.sign(beta[nonzero]))
    worst = 0.0
    if viol_zero.size:
        worst = float(viol_zero.max())
    if viol_active.size:
        worst = max(worst, float(viol_active.max()))
    return worst


def lasso_fit(X: np.ndarray, y: np.ndarray, delta: float, tol: float = 1e-8, max_sweeps: int = 5000) -> FittedModel:
    """Cyclic coordinate descent for (1/n)||y - X b||^2 + delta ||b||_1.

    Stops when the stationarity residual is at most tol: every zero
    coordinate satisfies |(2/n) X_j . r| <= delta + tol and every active one
    matches the penalty subgradient within tol.  Sweeps alternate between the
    full coordinate cycle and the active set.  Raises SolverError (carrying
    the best iterate) if max_sweeps is exhausted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_design(X, y)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n, m = X.shape
    col_sq = np.einsum("ij,ij->j", X, X) / n
    beta = np.zeros(m)
    resid = y.copy()
    half = delta / 2.0

    def sweep(indices: np.ndarray) -> float:
        moved = 0.0
        nonlocal resid
        for j in indices:
            a = col_sq[j]
            if a <= 0.0:
                continue
            rho = (X[:, j] @ resid) / n + a * beta[j]
            new = math.copysign(max(abs(rho) - half, 0.0), rho) / a
            step = new - beta[j]
            if step != 0.0:
                resid -= step * X[:, j]
                beta[j] = new
                moved = max(moved, abs(step) * math.sqrt(a))
        return moved

    all_idx = np.arange(m)
    for it in range(1, max_sweeps + 1):
        active_only = it % 5 != 1  # every 5th sweep is a full cycle
        idx = np.flatnonzero(beta) if active_only else all_idx
        if idx.size == 0:
            idx = all_idx
        sweep(idx)
        if it % 25 == 0:
            resid = y - X @ beta  # refresh against accumulated drift
        if not active_only or it % 5 == 0:
            kkt = _lasso_kkt_residual(X, resid, beta, delta)
            if kkt <= tol:
                diag = Diagnostics(lasso_objective(X, y, beta, delta), kkt, it)
                return FittedModel(beta, "lasso", diag, delta=float(delta))
    resid = y - X @ beta
    kkt = _lasso_kkt_residual(X, resid, beta, delta)
    best = FittedModel(beta, "lasso", Diagnostics(lasso_objective(X, y, beta, delta), kkt, max_sweeps, "tolerance not reached"), delta=float(delta))
    raise SolverError(f"lasso did not reach stationarity tolerance {tol} (residual {kkt:.3e})", best=best)


# ---------------------------------------------------------------------------
# adversarial training
# ---------------------------------------------------------------------------


def adv_train_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, delta: float, p: float) -> float:
    """Average worst-case squared error on the training set under lp attacks."""
    q = dual_order(p)
    e = y - X @ np.asarray(beta, dtype=float)
    return float(np.mean((np.abs(e) + delta * vector_norm(np.asarray(beta, dtype=float), q)) ** 2))


def _smoothed_norm(beta: np.ndarray, q: float, nu: float) -> tuple[float, np.ndarray]:
    """Smooth approximation of ||beta||_q with its gradient, exact as nu -> 0."""
    if q == 1.0:
        root = np.sqrt(beta**2 + nu**2)
        return float(np.sum(root - nu)), beta / root
    if q == 2.0:
        val = math.sqrt(float(beta @ beta) + nu**2)
        return val - nu, beta / val
    if q == INF:
        a = np.abs(beta)
        top = float(a.max()) if a.size else 0.0
        w = np.exp((a - top) / nu)
        total = float(w.sum())
        return top + nu * math.log(total), (w / total) * np.sign(beta)
    root = np.sqrt(beta**2 + nu**2)
    raw = float(np.sum(root**q)) ** (1.0 / q)
    grad = (root ** (q - 2.0) * beta) * raw ** (1.0 - q)
    return raw - beta.size ** (1.0 / q) * nu, grad


def _smoothed_value_grad(X, y, beta, delta, q, mu, nu):
    e = y - X @ beta
    phi = np.sqrt(e**2 + mu**2)
    nrm, nrm_grad = _smoothed_norm(beta, q, nu)
    h = phi + delta * nrm
    n = y.size
    value = float(h @ h) / n
    grad = -(2.0 / n) * (X.T @ (h * (e / phi))) + 2.0 * delta * float(h.mean()) * nrm_grad
    return value, grad


def _descend(value_grad: Callable, beta0: np.ndarray, max_iter: int) -> tuple[np.ndarray, int]:
    """Gradient descent with a doubling/halving backtracking step."""
    beta = beta0.copy()
    f, g = value_grad(beta)
    step = 1.0 / (float(np.linalg.norm(g)) + 1e-12)
    evals = 1
    stall = 0
    for _ in range(max_iter):
        gnorm_sq = float(g @ g)
        if gnorm_sq <= 1e-30:
            break
        accepted = False
        for _ in range(30):
            cand = beta - step * g
            f_new, g_new = value_grad(cand)
            evals += 1
            if f_new <= f - 1e-4 * step * gnorm_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        drop = f - f_new
        beta, f, g = cand, f_new, g_new
        step *= 1.3
        stall = stall + 1 if drop <= 1e-13 * (1.0 + abs(f)) else 0
        if stall >= 3:
            break
    return beta, evals


def _min_norm_subgradient(X, y, beta, delta, q) -> np.ndarray:
    """A subgradient of the exact objective, chosen minimal at kinks of ||.||_q."""
    n = y.size
    e = y - X @ beta
    h = np.abs(e) + delta * vector_norm(beta, q)
    base = -(2.0 / n) * (X.T @ (h * np.sign(e)))
    if delta == 0.0:
        return base
    w = 2.0 * delta * float(h.mean())
    if q == 1.0:
        g = base + w * np.sign(beta)
        zero = beta == 0.0
        g[zero] = base[zero] + np.clip(-base[zero], -w, w)
        return g
    if q == 2.0:
        nb = float(np.linalg.norm(beta))
        if nb > 0:
            return base + w * beta / nb
        shrink = min(1.0, w / max(float(np.linalg.norm(base)), 1e-300))
        return base * (1.0 - shrink)
    if q == INF:
        a = np.abs(beta)
        top = float(a.max()) if a.size else 0.0
        u = np.zeros_like(beta)
        if top > 0:
            idx = np.flatnonzero(a >= top * (1.0 - 1e-12))
            u[idx] = np.sign(beta[idx]) / idx.size
        return base + w * u
    root = np.abs(beta)
    raw = vector_norm(beta, q)
    if raw == 0.0:
        return base
    return base + w * np.sign(beta) * (root / raw) ** (q - 1.0)


def adv_train_fit(
    X: np.ndarray,
    y: np.ndarray,
    delta: float,
    p: float,
    tol: float = 1e-8,
    restarts: int = 10,
    seed: int = 0,
    max_iter: int = 600,
) -> FittedModel:
    """Adversarially-trained linear fit: minimize the worst-case training loss.

    Convex in beta.  Runs the smoothed first-order scheme from deterministic
    warm starts (minimum-norm, ridge) and `restarts` seeded random points,
    keeps the best exact objective, then applies subgradient polish and
    coordinate snapping.  Returns exact zeros whenever the zero-optimality
    certificate ||X^T y||_p <= delta ||y||_1 holds.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_design(X, y)
    p = as_norm_order(p)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    q = dual_order(p)
    n, m = X.shape

    if delta == 0.0:
        base = min_norm_fit(X, y)
        return FittedModel(base.beta_hat, "adv_train", base.diagnostics, delta=0.0, p=p)

    # exact global optimality of the zero predictor
    if vector_norm(X.T @ y, p) <= delta * float(np.sum(np.abs(y))) * (1.0 + 1e-12):
        beta = np.zeros(m)
        diag = Diagnostics(adv_train_objective(X, y, beta, delta, p), 0.0, 0, "zero-certificate")
        return FittedModel(beta, "adv_train", diag, delta=float(delta), p=p)

    warm = min_norm_fit(X, y).beta_hat
    starts = [warm, ridge_fit(X, y, delta).beta_hat]
    scale = max(float(np.linalg.norm(warm)), 1.0)
    rng = derive_rng(seed, "adv_train_starts")
    for _ in range(max(restarts, 0)):
        starts.append(rng.standard_normal(m) * scale / math.sqrt(m))

    y_scale = max(float(np.max(np.abs(y))), 1e-12)
    best_beta, best_val = None, math.inf
    total_evals = 0
    for beta0 in starts:
        beta = beta0
        for mu_rel in (1e-2, 1e-4, 1e-6, 1e-8):
            mu = mu_rel * y_scale
            nu = mu_rel * max(float(np.max(np.abs(beta))), y_scale)
            beta, evals = _descend(
                lambda b: _smoothed_value_grad(X, y, b, delta, q, mu, nu), beta, max_iter // 4
            )
            total_evals += evals
        val = adv_train_objective(X, y, beta, delta, p)
        if not math.isfinite(val):
            raise SolverError("adversarial training diverged (non-finite objective)", best=None)
        if val < best_val:
            best_beta, best_val = beta, val

    # exact-objective polish: rounds of diminishing subgradient steps, each
    # restarted from the incumbent with a smaller step scale
    base_scale = max(float(np.max(np.abs(best_beta))), 1e-3 * y_scale)
    for step_rel in (5e-2, 1e-2, 2e-3, 4e-4, 8e-5, 1.6e-5):
        beta = best_beta.copy()
        step0 = step_rel * base_scale
        for t in range(1, 61):
            g = _min_norm_subgradient(X, y, beta, delta, q)
            gn = float(np.linalg.norm(g))
            if gn <= 1e-300:
                break
            beta = beta - (step0 / math.sqrt(t)) / gn * g
            val = adv_train_objective(X, y, beta, delta, p)
            total_evals += 1
            if val < best_val:
                best_beta, best_val = beta.copy(), val

    # snap tiny coordinates (and the whole vector) to exact zero when harmless
    for cand in (np.where(np.abs(best_beta) < 1e-8 * max(1.0, float(np.max(np.abs(best_beta)))), 0.0, best_beta), np.zeros(m)):
        val = adv_train_objective(X, y, cand, delta, p)
        if val <= best_val * (1.0 + 1e-12):
            best_beta, best_val = cand, min(val, best_val)

    residual = float(np.linalg.norm(_min_norm_subgradient(X, y, best_beta, delta, q)))
    diag = Diagnostics(best_val, residual, total_evals)
    return FittedModel(best_beta, "adv_train", diag, delta=float(delta), p=p)


# ---------------------------------------------------------------------------
# expected risk and norm of the minimum-norm estimator given the design
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasVarianceTerms:
    """Noise-averaged risk/norm of the minimum-norm fit, split into components.

    expected_risk = bias_risk + variance_risk + sigma2 where
    bias_risk = ||Pi beta||_Sigma^2 and variance_risk = (sigma2/n) tr(pinv(Sigma_hat) Sigma);
    expected_norm_sq = ||Phi beta||^2 + (sigma2/n) tr(pinv(Sigma_hat)).
    """

    expected_risk: float
    expected_norm_sq: float
    bias_risk: float
    variance_risk: float
    bias_norm_sq: float
    variance_norm_sq: float


def bias_variance_terms(
    X: np.ndarray,
    beta: np.ndarray,
    sigma2: float,
    Sigma,
    *,
    decomposition: ProjectorDecomposition | None = None,
) -> BiasVarianceTerms:
    """Exact noise averages for the minimum-norm estimator on a fixed design.

    Sigma may be a dense matrix or any covariance object with quad/matmat
    methods (the structured covariances used by the data models).
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    dec = decomposition if decomposition is not None else projector_decomposition(X)
    n = dec.n
    pi_beta = dec.apply_pi(beta)
    phi_beta = beta - pi_beta
    if hasattr(Sigma, "quad"):
        bias_risk = Sigma.quad(pi_beta)
        SV = np.column_stack([Sigma.matvec(dec.V[:, i]) for i in range(dec.rank)]) if dec.rank else np.zeros((dec.m, 0))
    else:
        Sigma = np.asarray(Sigma, dtype=float)
        bias_risk = float(pi_beta @ Sigma @ pi_beta)
        SV = Sigma @ dec.V
    quad_dirs = np.einsum("ij,ij->j", dec.V, SV) if dec.rank else np.zeros(0)
    variance_risk = float(sigma2 * np.sum(quad_dirs / dec.s**2))
    bias_norm_sq = float(phi_beta @ phi_beta)
    variance_norm_sq = float(sigma2 * np.sum(1.0 / dec.s**2)) if dec.rank else 0.0
    return BiasVarianceTerms(
        expected_risk=bias_risk + variance_risk + float(sigma2),
        expected_norm_sq=bias_norm_sq + variance_norm_sq,
        bias_risk=bias_risk,
        variance_risk=variance_risk,
        bias_norm_sq=bias_norm_sq,
        variance_norm_sq=variance_norm_sq,
    )
