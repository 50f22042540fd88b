"""Risk and norm limits of the minimum-norm estimator as m/n -> gamma.

Closed forms for isotropic and equicorrelated Gaussian features, the
latent-factor family (whose overparameterized constants hinge on the unique
nonnegative root c0 of a rational fixed-point equation, solved here via its
quadratic expansion with a bisection fallback), and the norm curves under the
three feature scalings.

All risk outputs are the total prediction risk, i.e. they include the
irreducible noise sigma2; pass include_noise_floor=False for the excess risk
only.  gamma = 1 is the interpolation pole and is always a hard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datamodels import Scaling

__all__ = [
    "AsymptoticPoint",
    "LatentAsymptoticParams",
    "equicorrelated_asymptotics",
    "isotropic_asymptotics",
    "latent_asymptotics",
    "scaled_norm_curve",
    "solve_c0",
]


@dataclass(frozen=True)
class AsymptoticPoint:
    gamma: float
    risk: float
    l2norm_sq: float
    regime: str  # "under" | "over"


@dataclass(frozen=True)
class LatentAsymptoticParams:
    """Constants of the latent-family limit (NaN outside the over regime)."""

    psi: float
    gamma: float
    r2: float
    sigma2: float
    c0: float
    B: float
    V: float
    E1: float
    E2: float


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma == 1.0:
        raise ValueError("gamma = 1 is the interpolation pole; evaluate on either side")


def _check_moments(r2: float, sigma2: float) -> None:
    if r2 < 0 or sigma2 < 0:
        raise ValueError("r2 and sigma2 must be nonnegative")


def isotropic_asymptotics(
    gamma: float, r2: float, sigma2: float, *, include_noise_floor: bool = True
) -> AsymptoticPoint:
    """Limiting risk and squared l2 norm for isotropic features.

    Underparameterized (gamma < 1): excess risk sigma2*gamma/(1-gamma) and
    l2norm_sq = r2 + sigma2*gamma/(1-gamma).  Overparameterized (gamma > 1):
    excess risk r2*(1-1/gamma) + sigma2/(gamma-1) and
    l2norm_sq = r2/gamma + sigma2/(gamma-1).
    """
    _check_gamma(gamma)
    _check_moments(r2, sigma2)
    floor = sigma2 if include_noise_floor else 0.0
    if gamma < 1.0:
        excess = sigma2 * gamma / (1.0 - gamma)
        return AsymptoticPoint(gamma, excess + floor, r2 + excess, "under")
    excess = r2 * (1.0 - 1.0 / gamma) + sigma2 / (gamma - 1.0)
    return AsymptoticPoint(gamma, excess + floor, r2 / gamma + sigma2 / (gamma - 1.0), "over")


def equicorrelated_asymptotics(
    gamma: float, rho: float, r2: float, sigma2: float, *, include_noise_floor: bool = True
) -> AsymptoticPoint:
    """Limits under rho-equicorrelated features (rho = 0 reduces to isotropic).

    The correlation leaves the noise part of the risk untouched but rescales
    the signal part by (1-rho) and inflates the norm's variance term by
    1/(1-rho).
    """
    _check_gamma(gamma)
    _check_moments(r2, sigma2)
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    floor = sigma2 if include_noise_floor else 0.0
    if gamma < 1.0:
        excess = sigma2 * gamma / (1.0 - gamma)
        norm_sq = r2 + sigma2 * gamma / ((1.0 - gamma) * (1.0 - rho))
        return AsymptoticPoint(gamma, excess + floor, norm_sq, "under")
    excess = r2 * (1.0 - rho) * (1.0 - 1.0 / gamma) + sigma2 / (gamma - 1.0)
    norm_sq = r2 / gamma + sigma2 / ((gamma - 1.0) * (1.0 - rho))
    return AsymptoticPoint(gamma, excess + floor, norm_sq, "over")


def _c0_residual(c: float, psi: float, gamma: float) -> float:
    big = (1.0 + 1.0 / psi) * gamma
    return (1.0 - 1.0 / gamma) - ((1.0 - psi) / (1.0 + c * gamma) + psi / (1.0 + c * big))


def solve_c0(psi: float, gamma: float) -> float:
    """Unique nonnegative root c0 of

        1 - 1/gamma = (1-psi)/(1 + c0*gamma) + psi/(1 + c0*(1+1/psi)*gamma).

    Clearing denominators gives a quadratic with one positive and one negative
    root, so the positive quadratic-formula root is taken (stable form), then
    sharpened by Newton; bisection is the fallback.  Residual <= 1e-12.
    """
    if not 0.0 < psi <= 1.0:
        raise ValueError(f"psi must lie in (0, 1], got {psi}")
    if not gamma > 1.0:
        raise ValueError(f"the fixed-point equation needs gamma > 1, got {gamma}")
    t = 1.0 - 1.0 / gamma
    A = gamma
    B = (1.0 + 1.0 / psi) * gamma
    a = t * A * B
    b = t * (A + B) - (1.0 - psi) * B - psi * A
    const = -1.0 / gamma
    disc = b * b - 4.0 * a * const  # > b^2 since a > 0, const < 0
    root = math.sqrt(disc)
    c0 = (2.0 * -const) / (b + root) if b >= 0 else (-b + root) / (2.0 * a)

    for _ in range(4):  # Newton sharpening on the rational form
        f = _c0_residual(c0, psi, gamma)
        fp = (1.0 - psi) * A / (1.0 + c0 * A) ** 2 + psi * B / (1.0 + c0 * B) ** 2
        if fp == 0.0:
            break
        c0 -= f / fp

    if not (math.isfinite(c0) and c0 >= 0.0 and abs(_c0_residual(c0, psi, gamma)) <= 1e-12):
        c0 = _bisect_c0(psi, gamma)
    if abs(_c0_residual(c0, psi, gamma)) > 1e-12:
        raise ArithmeticError(f"c0 solve failed for psi={psi}, gamma={gamma}")
    return c0


def _bisect_c0(psi: float, gamma: float) -> float:
    lo, hi = 0.0, 1.0
    while _c0_residual(hi, psi, gamma) < 0.0:  # residual increases in c
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError(f"no nonnegative root found for psi={psi}, gamma={gamma}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _c0_residual(mid, psi, gamma) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def latent_asymptotics(
    psi: float, gamma: float, r2: float, sigma2: float, *, include_noise_floor: bool = True
) -> tuple[float, float, LatentAsymptoticParams]:
    """Limiting (risk, l2norm_sq, params) for the latent-factor family.

    psi = d/m is the latent-to-ambient dimension ratio.  Underparameterized,
    the excess risk sigma2*gamma/(1-gamma) does not depend on psi while the
    norm picks up a 1/(1+psi) correction; overparameterized, both follow the
    c0-based constants stored in the returned params.
    """
    _check_gamma(gamma)
    _check_moments(r2, sigma2)
    if not 0.0 < psi <= 1.0:
        raise ValueError(f"psi must lie in (0, 1], got {psi}")
    floor = sigma2 if include_noise_floor else 0.0
    if gamma < 1.0:
        excess = sigma2 * gamma / (1.0 - gamma)
        norm_sq = r2 + sigma2 * gamma / ((1.0 - gamma) * (1.0 + psi))
        nan = math.nan
        params = LatentAsymptoticParams(psi, gamma, r2, sigma2, nan, nan, nan, nan, nan)
        return excess + floor, norm_sq, params

    c0 = solve_c0(psi, gamma)
    ipsi = 1.0 + 1.0 / psi
    plain = 1.0 + c0 * gamma
    wide = 1.0 + c0 * ipsi * gamma
    E1 = (1.0 - psi) / plain**2 + psi * ipsi**2 / plain**2
    E2 = (1.0 - psi) / plain**2 + (1.0 + psi) / wide**2
    V = gamma * c0 * E1 / E2
    B = (1.0 + gamma * c0 * E1 / E2) * ipsi / wide**2
    excess = r2 * B + sigma2 * V
    norm_sq = r2 * c0 * gamma * ipsi / wide + sigma2 * c0 * gamma
    params = LatentAsymptoticParams(psi, gamma, r2, sigma2, c0, B, V, E1, E2)
    return excess + floor, norm_sq, params


def scaled_norm_curve(
    gamma_grid, n: int, r2: float, sigma2: float, scaling: Scaling | str
) -> np.ndarray:
    """Limiting ||beta_hat||_2^2 along an overparameterized gamma grid when the
    features are divided by eta(m), with m = round(gamma * n).

    Unit scaling decays like 1/gamma; sqrt(log m) scaling only slows that
    decay; sqrt(m) scaling decreases toward the constant (r2 + sigma2) * n
    as m grows.
    """
    scaling = Scaling(scaling)
    _check_moments(r2, sigma2)
    if n < 1:
        raise ValueError("n must be at least 1")
    grid = np.asarray(gamma_grid, dtype=float)
    out = np.empty(grid.shape)
    for idx, gamma in np.ndenumerate(grid):
        if not gamma > 1.0:
            raise ValueError(f"scaled norm curves are defined for gamma > 1, got {gamma}")
        m = round(gamma * n)
        if m <= n:
            raise ValueError(f"gamma = {gamma} rounds to m <= n at n = {n} (interpolation pole)")
        g = m / n
        unit = r2 / g + sigma2 / (g - 1.0)
        if scaling is Scaling.UNIT:
            out[idx] = unit
        elif scaling is Scaling.SQRT_LOG:
            out[idx] = unit * math.log(m)
        else:
            out[idx] = r2 * n + sigma2 / (1.0 / n - 1.0 / m)
    return out
