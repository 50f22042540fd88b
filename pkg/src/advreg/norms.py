"""Norm orders, dual pairs, and extremal directions for linear attacks.

A norm order p lives in [1, inf].  Infinity is represented by ``math.inf``
(an exact, distinguished IEEE value); duality at the boundary pairs (1, inf)
and (inf, 1) is computed by explicit branching so no rounding ever occurs
there.  JSON configs spell infinity as the string "inf".
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "INF",
    "DegenerateDirectionError",
    "NormSandwich",
    "as_norm_order",
    "dual_order",
    "holder_extremal_direction",
    "norm_order_label",
    "norm_sandwich",
    "vector_norm",
]

INF = math.inf

# Relative tolerance for deciding which coordinates share the maximum modulus
# when building the p=1 extremal direction (ties split the unit mass).
TIE_REL_TOL = 1e-12


class DegenerateDirectionError(ValueError):
    """No extremal direction exists for the all-zero vector."""


def as_norm_order(p: float | int | str) -> float:
    """Normalize a norm order: accepts numbers in [1, inf] or the string "inf"."""
    if isinstance(p, str):
        if p.strip().lower() in {"inf", "infinity"}:
            return INF
        try:
            p = float(p)
        except ValueError:
            raise ValueError(f"invalid norm order {p!r}") from None
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm order must lie in [1, inf], got {p}")
    return p


def norm_order_label(p: float) -> str:
    """Stable text form of an order for CSV/JSON ("inf", "2", "1.5", ...)."""
    if p == INF:
        return "inf"
    return repr(int(p)) if float(p).is_integer() else repr(float(p))


def dual_order(p: float | int | str) -> float:
    """The conjugate exponent q with 1/p + 1/q = 1; (1, inf) and (inf, 1) exact."""
    p = as_norm_order(p)
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    if p == 2.0:
        return 2.0
    return p / (p - 1.0)


def vector_norm(v: np.ndarray, p: float | int | str) -> float:
    """The lp norm of a vector, p in [1, inf]."""
    p = as_norm_order(p)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("vector_norm expects a 1-D array")
    if p == INF:
        return float(np.max(np.abs(v))) if v.size else 0.0
    return float(np.linalg.norm(v, ord=p))


def holder_extremal_direction(beta: np.ndarray, p: float | int | str) -> np.ndarray:
    """Unit-lp vector maximizing d . beta over the lp ball; the maximum is ||beta||_q.

    For p in (1, inf) the maximizer is sign(beta) |beta|^(q-1) renormalized;
    for p = inf it is the sign pattern; for p = 1 the unit mass is split evenly
    over the coordinates attaining max |beta_i| (ties within TIE_REL_TOL).
    """
    p = as_norm_order(p)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise ValueError("holder_extremal_direction expects a 1-D array")
    a = np.abs(beta)
    if not np.any(a > 0.0):
        raise DegenerateDirectionError("extremal direction undefined for the zero vector")
    if p == INF:
        return np.sign(beta)
    if p == 1.0:
        top = np.flatnonzero(a >= a.max() * (1.0 - TIE_REL_TOL))
        d = np.zeros_like(beta)
        d[top] = np.sign(beta[top]) / top.size
        return d
    q = dual_order(p)
    w = np.sign(beta) * a ** (q - 1.0)
    return w / np.linalg.norm(w, ord=p)


class NormSandwich(NamedTuple):
    lower: float
    upper: float
    holds: bool


def norm_sandwich(v: np.ndarray, p: float | int | str, q: float | int | str) -> NormSandwich:
    """Bounds ||v||_q <= ||v||_p <= m^(1/p - 1/q) ||v||_q for orders q > p.

    Returns (lower, upper, holds) where holds checks the sandwich against the
    directly computed ||v||_p (up to relative rounding slack).
    """
    p = as_norm_order(p)
    q = as_norm_order(q)
    if not q > p:
        raise ValueError(f"norm_sandwich requires q > p, got p={p}, q={q}")
    v = np.asarray(v, dtype=float)
    m = v.size
    if m == 0:
        raise ValueError("norm_sandwich expects a nonempty vector")
    inv_p = 0.0 if p == INF else 1.0 / p
    inv_q = 0.0 if q == INF else 1.0 / q
    lower = vector_norm(v, q)
    upper = m ** (inv_p - inv_q) * lower
    mid = vector_norm(v, p)
    slack = 1e-12 * max(1.0, mid)
    holds = (lower <= mid + slack) and (mid <= upper + slack)
    return NormSandwich(lower, upper, holds)
