"""Adversarial risk of a linear predictor under lp-bounded test-time attacks.

The attacker moves a test point x0 by any Delta with ||Delta||_p <= delta
before the predictor is applied.  For a linear predictor the worst case is
explicit: the squared error becomes (|y0 - x0 . b| + delta ||b||_q)^2 with q
the dual order, attained by an extremal direction of the lp ball.  Averaging
over a Gaussian test distribution gives a closed form in the standard risk R
and ||b||_q, since |y0 - x0 . b| is half-normal with mean sqrt(2 R / pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from ._seeding import derive_rng
from .datamodels import DataModel, GroundTruth, realize_truth
from .norms import INF, as_norm_order, dual_order, norm_order_label, vector_norm, holder_extremal_direction

__all__ = [
    "AdversarialBudget",
    "AttackResult",
    "BoundPair",
    "MonteCarloEstimate",
    "RiskReport",
    "RiskReportEntry",
    "adv_risk_gaussian",
    "adv_risk_monte_carlo",
    "build_risk_report",
    "lp_transfer_bounds",
    "pointwise_adv_loss",
    "risk_bounds",
    "worst_case_attack",
]

_MC_CHUNK = 1 << 15


@dataclass(frozen=True)
class AdversarialBudget:
    """An lp attack ball of radius delta (delta >= 0, p in [1, inf])."""

    delta: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", as_norm_order(self.p))
        object.__setattr__(self, "delta", float(self.delta))
        if self.delta < 0.0 or math.isnan(self.delta):
            raise ValueError(f"delta must be nonnegative, got {self.delta}")

    @property
    def q(self) -> float:
        """Dual order: the attack inflates the loss through ||b||_q."""
        return dual_order(self.p)

    def label(self) -> str:
        return f"p={norm_order_label(self.p)},delta={self.delta!r}"


def pointwise_adv_loss(beta_hat: np.ndarray, x0: np.ndarray, y0: float, budget: AdversarialBudget) -> float:
    """Worst-case squared error at one point: (|y0 - x0 . b| + delta ||b||_q)^2."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    err = abs(float(y0) - float(np.dot(x0, beta_hat)))
    return (err + budget.delta * vector_norm(beta_hat, budget.q)) ** 2


@dataclass(frozen=True)
class AttackResult:
    """A worst-case perturbation; vacuous means the predictor is identically 0."""

    perturbation: np.ndarray
    vacuous: bool


def worst_case_attack(beta_hat: np.ndarray, x0: np.ndarray, y0: float, budget: AdversarialBudget) -> AttackResult:
    """Perturbation of norm delta achieving pointwise_adv_loss at (x0, y0).

    Delta_x = -sign(e0) * delta * extremal(beta_hat, p), with sign(0) = +1.
    For the zero predictor every perturbation is equally (in)effective; the
    zero vector is returned and flagged vacuous.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if not np.any(beta_hat != 0.0):
        return AttackResult(np.zeros_like(x0), vacuous=True)
    e0 = float(y0) - float(np.dot(x0, beta_hat))
    sign = 1.0 if e0 >= 0.0 else -1.0
    direction = holder_extremal_direction(beta_hat, budget.p)
    return AttackResult(-sign * budget.delta * direction, vacuous=False)


def _validate_covariance(Sigma: np.ndarray) -> None:
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise ValueError("Sigma must be square")
    scale = float(np.max(np.abs(Sigma))) if Sigma.size else 0.0
    if not np.allclose(Sigma, Sigma.T, atol=1e-10 * max(scale, 1.0)):
        raise ValueError("Sigma must be symmetric")
    m = Sigma.shape[0]
    jitter = 1e-12 * max(scale, 1.0)
    try:
        np.linalg.cholesky(Sigma + jitter * np.eye(m))
    except np.linalg.LinAlgError:
        raise ValueError("Sigma must be positive semidefinite") from None


def adv_risk_gaussian(
    beta_hat: np.ndarray,
    beta: np.ndarray,
    Sigma: np.ndarray,
    sigma2: float,
    budget: AdversarialBudget,
    *,
    validate: bool = True,
) -> float:
    """Exact adversarial risk under x0 ~ N(0, Sigma), y0 = x0 . beta + N(0, sigma2).

    R = (beta - beta_hat)^T Sigma (beta - beta_hat) + sigma2 and the result is
    delta^2 ||b||_q^2 + 2 delta ||b||_q sqrt(2 R / pi) + R.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta = np.asarray(beta, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    if beta_hat.shape != beta.shape or Sigma.shape != (beta.size, beta.size):
        raise ValueError("dimension mismatch between beta_hat, beta, and Sigma")
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    if validate:
        _validate_covariance(Sigma)
    diff = beta - beta_hat
    R = max(float(diff @ Sigma @ diff), 0.0) + float(sigma2)
    return _adv_risk_from_standard(R, vector_norm(beta_hat, budget.q), budget.delta)


def _adv_risk_from_standard(R: float, norm_q: float, delta: float) -> float:
    return delta**2 * norm_q**2 + 2.0 * delta * norm_q * math.sqrt(2.0 * R / math.pi) + R


class MonteCarloEstimate(NamedTuple):
    estimate: float
    std_error: float


def adv_risk_monte_carlo(
    beta_hat: np.ndarray,
    model: Union[DataModel, GroundTruth],
    budget: AdversarialBudget,
    samples: int,
    seed: int,
) -> MonteCarloEstimate:
    """Sample mean and standard error of pointwise_adv_loss over fresh test draws.

    Draws come in fixed-size chunks with independently derived streams, so the
    estimate is bit-identical however the chunks are scheduled.  `model` may be
    a DataModel (its ground truth is realized from the same seed) or an
    explicit GroundTruth.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    truth = model if isinstance(model, GroundTruth) else realize_truth(model, seed)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.shape != truth.beta.shape:
        raise ValueError("beta_hat does not match the model dimension")
    shift = budget.delta * vector_norm(beta_hat, budget.q)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_index = 0
    while done < samples:
        k = min(_MC_CHUNK, samples - done)
        rng = derive_rng(seed, "mc_chunk", chunk_index)
        X0, y0 = truth.sample_points(k, rng)
        loss = (np.abs(y0 - X0 @ beta_hat) + shift) ** 2
        total += float(loss.sum())
        total_sq += float((loss * loss).sum())
        done += k
        chunk_index += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return MonteCarloEstimate(mean, math.sqrt(var / samples))


class BoundPair(NamedTuple):
    lower: float
    upper: float


def risk_bounds(standard_risk: float, norm_q_sq: float, delta: float) -> BoundPair:
    """Sandwich R + delta^2 Lq <= adversarial risk <= (sqrt(R) + delta sqrt(Lq))^2,

    where Lq is the (expected) squared dual norm of the predictor."""
    if standard_risk < 0 or norm_q_sq < 0 or delta < 0:
        raise ValueError("risk_bounds arguments must be nonnegative")
    if delta == 0.0:
        return BoundPair(standard_risk, standard_risk)
    lower = standard_risk + delta**2 * norm_q_sq
    upper = (math.sqrt(standard_risk) + delta * math.sqrt(norm_q_sq)) ** 2
    return BoundPair(lower, upper)


def lp_transfer_bounds(standard_risk: float, norm_l2_sq: float, delta: float, m: int, p: float) -> BoundPair:
    """Bounds on the lp adversarial risk using only the l2 norm of the predictor.

    p = 1 (dual q = inf):  [R + delta^2 L2 / m,  (sqrt(R) + delta sqrt(L2))^2]
    p = inf (dual q = 1):  [R + delta^2 L2,      (sqrt(R) + delta sqrt(m L2))^2]
    """
    p = as_norm_order(p)
    if standard_risk < 0 or norm_l2_sq < 0 or delta < 0:
        raise ValueError("lp_transfer_bounds arguments must be nonnegative")
    if m < 1:
        raise ValueError("m must be positive")
    if delta == 0.0 and p in (1.0, INF):
        return BoundPair(standard_risk, standard_risk)
    if p == 1.0:
        lower = standard_risk + delta**2 * norm_l2_sq / m
        upper = (math.sqrt(standard_risk) + delta * math.sqrt(norm_l2_sq)) ** 2
    elif p == INF:
        lower = standard_risk + delta**2 * norm_l2_sq
        upper = (math.sqrt(standard_risk) + delta * math.sqrt(m * norm_l2_sq)) ** 2
    else:
        raise ValueError(f"transfer bounds are defined for p in {{1, inf}}, got p={p}")
    return BoundPair(lower, upper)


@dataclass(frozen=True)
class RiskReportEntry:
    p: float
    delta: float
    adv_risk: float
    lower: float
    upper: float


@dataclass(frozen=True)
class RiskReport:
    """Standard risk, parameter norms, and per-budget adversarial risks/bounds."""

    standard_risk: float
    norm_l1: float
    norm_l2: float
    norm_linf: float
    entries: tuple[RiskReportEntry, ...]

    def entry(self, budget: AdversarialBudget) -> RiskReportEntry:
        for e in self.entries:
            if e.p == budget.p and e.delta == budget.delta:
                return e
        raise KeyError(f"no entry for {budget.label()}")

    def to_dict(self) -> dict:
        return {
            "standard_risk": self.standard_risk,
            "norm_l1": self.norm_l1,
            "norm_l2": self.norm_l2,
            "norm_linf": self.norm_linf,
            "adversarial": [
                {
                    "p": norm_order_label(e.p),
                    "delta": e.delta,
                    "adv_risk": e.adv_risk,
                    "lower": e.lower,
                    "upper": e.upper,
                }
                for e in self.entries
            ],
        }


def build_risk_report(
    beta_hat: np.ndarray,
    truth: GroundTruth,
    budgets: Sequence[AdversarialBudget],
) -> RiskReport:
    """Closed-form risk report of one fitted predictor against its ground truth.

    All entries reuse the same realized standard risk, so the sandwich
    lower <= adv <= upper holds entry-wise by construction and delta = 0
    reproduces the standard risk exactly.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    R = truth.standard_risk(beta_hat)
    entries = []
    for budget in budgets:
        nq = vector_norm(beta_hat, budget.q)
        adv = _adv_risk_from_standard(R, nq, budget.delta)
        lo, up = risk_bounds(R, nq * nq, budget.delta)
        entries.append(RiskReportEntry(budget.p, budget.delta, adv, lo, up))
    return RiskReport(
        standard_risk=R,
        norm_l1=vector_norm(beta_hat, 1),
        norm_l2=vector_norm(beta_hat, 2),
        norm_linf=vector_norm(beta_hat, INF),
        entries=tuple(entries),
    )
