"""Gaussian data-generating processes and their linear-model ground truths.

Four families are supported: isotropic features, equicorrelated features,
a latent-factor model observed through many noisy features, and the
weak-features model whose coordinates each carry a 1/sqrt(m) sliver of the
response.  Every family is (or is exactly equivalent to) a Gaussian linear
model y = x . beta + eps, and `sample_dataset` returns that ground truth
(beta, Sigma, sigma2) alongside the sampled design.

Feature scaling divides x by eta(m) and multiplies beta by eta(m), leaving
predictions and risks unchanged while reshaping the norm of the parameter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from ._seeding import derive_rng

__all__ = [
    "Dataset",
    "DataModel",
    "EquicorrelatedModel",
    "GroundTruth",
    "IsotropicModel",
    "LatentModel",
    "Scaling",
    "WeakFeaturesModel",
    "equicorrelated_sigma",
    "latent_effective_params",
    "latent_to_linear",
    "make_orthogonal_W",
    "model_from_dict",
    "model_to_dict",
    "sample_dataset",
    "weak_features_reference",
]


class Scaling(str, enum.Enum):
    """Feature rescaling x -> x / eta(m)."""

    UNIT = "unit"
    SQRT_LOG = "sqrt_log"
    SQRT_M = "sqrt_m"

    def eta(self, m: int) -> float:
        if self is Scaling.UNIT:
            return 1.0
        if self is Scaling.SQRT_LOG:
            if m < 2:
                raise ValueError("sqrt_log scaling requires m >= 2")
            return math.sqrt(math.log(m))
        return math.sqrt(m)


# ---------------------------------------------------------------------------
# covariance representations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ScaledIdentityCov:
    """Sigma = c I."""

    m: int
    c: float

    def quad(self, v: np.ndarray) -> float:
        return self.c * float(v @ v)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.c * v

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        return math.sqrt(self.c) * rng.standard_normal((k, self.m))

    def dense(self) -> np.ndarray:
        return self.c * np.eye(self.m)


@dataclass(frozen=True)
class _DiagPlusRankOneCov:
    """Sigma = a I + b 11^T (equicorrelated and weak-features covariances)."""

    m: int
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0.0 or self.a + self.m * self.b < 0.0:
            raise ValueError("covariance a I + b 11^T is not PSD")

    def quad(self, v: np.ndarray) -> float:
        s = float(v.sum())
        return self.a * float(v @ v) + self.b * s * s

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.a * v + self.b * v.sum()

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        # Sigma^(1/2) = sqrt(a) (I - 11^T/m) + sqrt(a + m b) 11^T/m
        z = rng.standard_normal((k, self.m))
        mix = (math.sqrt(self.a + self.m * self.b) - math.sqrt(self.a)) / self.m
        return math.sqrt(self.a) * z + mix * z.sum(axis=1, keepdims=True)

    def dense(self) -> np.ndarray:
        return self.a * np.eye(self.m) + self.b * np.ones((self.m, self.m))


@dataclass(frozen=True)
class _FactorCov:
    """Sigma = c (I + W W^T) for a tall factor-loading matrix W."""

    W: np.ndarray
    c: float

    @property
    def m(self) -> int:
        return self.W.shape[0]

    def quad(self, v: np.ndarray) -> float:
        wv = self.W.T @ v
        return self.c * (float(v @ v) + float(wv @ wv))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.c * (v + self.W @ (self.W.T @ v))

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        d = self.W.shape[1]
        z = rng.standard_normal((k, d))
        u = rng.standard_normal((k, self.m))
        return math.sqrt(self.c) * (z @ self.W.T + u)

    def dense(self) -> np.ndarray:
        return self.c * (np.eye(self.m) + self.W @ self.W.T)


@dataclass(frozen=True)
class _DenseCov:
    Sigma: np.ndarray

    @property
    def m(self) -> int:
        return self.Sigma.shape[0]

    def quad(self, v: np.ndarray) -> float:
        return float(v @ self.Sigma @ v)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.Sigma @ v

    def sample(self, k: int, rng: np.random.Generator) -> np.ndarray:
        vals, vecs = np.linalg.eigh(self.Sigma)
        vals = np.clip(vals, 0.0, None)
        z = rng.standard_normal((k, self.m))
        return (z * np.sqrt(vals)) @ vecs.T

    def dense(self) -> np.ndarray:
        return self.Sigma


_Cov = Union[_ScaledIdentityCov, _DiagPlusRankOneCov, _FactorCov, _DenseCov]


def _scale_cov(cov: _Cov, factor: float) -> _Cov:
    if isinstance(cov, _ScaledIdentityCov):
        return replace(cov, c=cov.c * factor)
    if isinstance(cov, _DiagPlusRankOneCov):
        return replace(cov, a=cov.a * factor, b=cov.b * factor)
    if isinstance(cov, _FactorCov):
        return replace(cov, c=cov.c * factor)
    return _DenseCov(cov.Sigma * factor)


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------


@dataclass
class GroundTruth:
    """The linear model that generated (or is equivalent to) the data.

    Test points follow x ~ N(0, Sigma), y = x . beta + N(0, sigma2).
    """

    beta: np.ndarray
    cov: _Cov
    sigma2: float

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if not isinstance(self.cov, (_ScaledIdentityCov, _DiagPlusRankOneCov, _FactorCov, _DenseCov)):
            Sigma = np.asarray(self.cov, dtype=float)
            if Sigma.shape != (self.beta.size, self.beta.size):
                raise ValueError(
                    f"cov must be a {self.beta.size} x {self.beta.size} matrix, got shape {Sigma.shape}"
                )
            self.cov = _DenseCov(Sigma)
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @property
    def m(self) -> int:
        return self.beta.size

    @property
    def Sigma(self) -> np.ndarray:
        """Dense covariance matrix (materialized on demand)."""
        return self.cov.dense()

    def standard_risk(self, beta_hat: np.ndarray) -> float:
        """E (y0 - x0 . beta_hat)^2 = (beta - beta_hat)^T Sigma (...) + sigma2."""
        diff = np.asarray(beta_hat, dtype=float) - self.beta
        return self.cov.quad(diff) + self.sigma2

    def sample_points(self, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        X = self.cov.sample(k, rng)
        y = X @ self.beta + math.sqrt(self.sigma2) * rng.standard_normal(k)
        return X, y

    def rescaled(self, eta: float) -> "GroundTruth":
        """Ground truth of the scaled features x/eta (predictions unchanged)."""
        return GroundTruth(self.beta * eta, _scale_cov(self.cov, 1.0 / eta**2), self.sigma2)


# ---------------------------------------------------------------------------
# model specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropicModel:
    """x ~ N(0, I_m); beta uniform on the sphere of squared radius r2."""

    m: int
    r2: float
    sigma2: float
    scaling: Scaling = Scaling.UNIT

    def __post_init__(self):
        _check_positive_dims(self.m)
        if self.r2 < 0 or self.sigma2 < 0:
            raise ValueError("r2 and sigma2 must be nonnegative")


@dataclass(frozen=True)
class EquicorrelatedModel:
    """x ~ N(0, Sigma) with Sigma_ij = rho off the diagonal; beta ~ N(0, r2/m I)."""

    m: int
    rho: float
    r2: float
    sigma2: float
    scaling: Scaling = Scaling.UNIT

    def __post_init__(self):
        _check_positive_dims(self.m)
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.r2 < 0 or self.sigma2 < 0:
            raise ValueError("r2 and sigma2 must be nonnegative")


@dataclass(frozen=True)
class LatentModel:
    """x = W z + u observes d latent factors through m noisy features.

    z ~ N(0, I_d), u ~ N(0, I_m), y = theta . z + N(0, sigma_xi2); W is drawn
    with orthogonal columns scaled so W^T W = (m/d) I_d.
    """

    m: int
    d: int
    theta: tuple[float, ...]
    sigma_xi2: float
    scaling: Scaling = Scaling.UNIT

    def __post_init__(self):
        _check_positive_dims(self.m)
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if not 1 <= self.d <= self.m:
            raise ValueError(f"need 1 <= d <= m, got d={self.d}, m={self.m}")
        if len(self.theta) != self.d:
            raise ValueError(f"theta must have length d={self.d}, got {len(self.theta)}")
        if self.sigma_xi2 < 0:
            raise ValueError("sigma_xi2 must be nonnegative")

    @property
    def theta_vec(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)


@dataclass(frozen=True)
class WeakFeaturesModel:
    """y ~ N(0,1); each feature x_j | y ~ N(y/sqrt(m), 1/m)."""

    m: int
    scaling: Scaling = Scaling.UNIT

    def __post_init__(self):
        _check_positive_dims(self.m)


DataModel = Union[IsotropicModel, EquicorrelatedModel, LatentModel, WeakFeaturesModel]

_VARIANTS = {
    "isotropic": IsotropicModel,
    "equicorrelated": EquicorrelatedModel,
    "latent": LatentModel,
    "weak_features": WeakFeaturesModel,
}


def _check_positive_dims(m: int) -> None:
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")


def model_to_dict(model: DataModel) -> dict:
    """JSON-ready spec of a data model."""
    for name, cls in _VARIANTS.items():
        if isinstance(model, cls):
            out = {"variant": name}
            for f in model.__dataclass_fields__:
                val = getattr(model, f)
                if isinstance(val, Scaling):
                    val = val.value
                elif isinstance(val, tuple):
                    val = list(val)
                out[f] = val
            return out
    raise TypeError(f"not a data model: {model!r}")


def model_from_dict(spec: dict) -> DataModel:
    """Inverse of model_to_dict."""
    spec = dict(spec)
    try:
        variant = spec.pop("variant")
    except KeyError:
        raise ValueError("model spec is missing the 'variant' field") from None
    try:
        cls = _VARIANTS[str(variant).lower()]
    except KeyError:
        raise ValueError(f"unknown model variant {variant!r}") from None
    if "scaling" in spec:
        spec["scaling"] = Scaling(spec["scaling"])
    if cls is LatentModel and "theta" in spec:
        spec["theta"] = tuple(spec["theta"])
    try:
        return cls(**spec)
    except TypeError as exc:
        raise ValueError(f"bad fields for {variant!r} model: {exc}") from None


# ---------------------------------------------------------------------------
# structural helpers
# ---------------------------------------------------------------------------


def equicorrelated_sigma(m: int, rho: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense equicorrelated covariance with its exact eigendecomposition.

    Eigenvalues are 1 + (m-1) rho (eigenvector 1/sqrt(m) 1) and 1 - rho with
    multiplicity m - 1.  Returns (Sigma, eigenvalues, eigenvectors) with
    eigenvectors in columns, first column the all-ones direction.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    _check_positive_dims(m)
    Sigma = (1.0 - rho) * np.eye(m) + rho * np.ones((m, m))
    eigenvalues = np.full(m, 1.0 - rho)
    eigenvalues[0] = 1.0 + (m - 1) * rho
    ones = np.full(m, 1.0 / math.sqrt(m))
    # Householder reflection mapping e1 to the all-ones direction; its columns
    # form an orthonormal basis whose remaining vectors span the complement.
    v = ones.copy()
    v[0] -= 1.0
    nv = np.linalg.norm(v)
    if nv > 0:
        v /= nv
        eigenvectors = np.eye(m) - 2.0 * np.outer(v, v)
    else:  # m == 1
        eigenvectors = np.eye(m)
    return Sigma, eigenvalues, eigenvectors


def make_orthogonal_W(m: int, d: int, seed: int | np.random.Generator) -> np.ndarray:
    """m x d loading matrix with W^T W = (m/d) I_d, from a QR of Gaussian noise."""
    if not 1 <= d <= m:
        raise ValueError(f"need 1 <= d <= m, got d={d}, m={m}")
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "orthogonal_w")
    G = rng.standard_normal((m, d))
    Q, R = np.linalg.qr(G)
    # fix the sign gauge so the draw is a deterministic function of G
    Q = Q * np.sign(np.diag(R))
    return math.sqrt(m / d) * Q


def latent_to_linear(W: np.ndarray, theta: np.ndarray, sigma_xi2: float) -> GroundTruth:
    """Linear-model equivalent of the latent-factor observation model.

    beta = W (I_d + W^T W)^(-1) theta, Sigma = I_m + W W^T, and
    sigma2 = sigma_xi2 + theta . (I_d + W^T W)^(-1) theta.
    """
    W = np.asarray(W, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if W.ndim != 2 or theta.ndim != 1 or W.shape[1] != theta.size:
        raise ValueError("shape mismatch between W and theta")
    if sigma_xi2 < 0:
        raise ValueError("sigma_xi2 must be nonnegative")
    d = theta.size
    core = np.linalg.solve(np.eye(d) + W.T @ W, theta)
    beta = W @ core
    sigma2 = sigma_xi2 + float(theta @ core)
    return GroundTruth(beta, _FactorCov(W, 1.0), sigma2)


def latent_effective_params(psi: float, theta_norm_sq: float, sigma_xi2: float) -> tuple[float, float]:
    """(r2, sigma2) of the linear equivalent at aspect ratio psi = d/m.

    With W^T W = (1/psi) I_d: r2 = ||beta||^2 = psi/(1+psi)^2 ||theta||^2 and
    sigma2 = sigma_xi2 + psi/(1+psi) ||theta||^2.
    """
    if psi <= 0:
        raise ValueError("psi must be positive")
    r2 = psi / (1.0 + psi) ** 2 * theta_norm_sq
    sigma2 = sigma_xi2 + psi / (1.0 + psi) * theta_norm_sq
    return r2, sigma2


def weak_features_reference(m: int) -> tuple[np.ndarray, float, float]:
    """Reference predictor (1/sqrt(m)) 1 with its standard risk 1/m and l1 norm sqrt(m)."""
    _check_positive_dims(m)
    return np.full(m, 1.0 / math.sqrt(m)), 1.0 / m, math.sqrt(m)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """A sampled design with its generating ground truth (post feature scaling)."""

    X: np.ndarray
    y: np.ndarray
    truth: GroundTruth
    model: DataModel
    seed: int

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def _unscaled_truth(model: DataModel, seed: int) -> GroundTruth:
    """Draw the model's ground truth (before feature scaling)."""
    rng = derive_rng(seed, "truth")
    if isinstance(model, IsotropicModel):
        g = rng.standard_normal(model.m)
        beta = math.sqrt(model.r2) * g / np.linalg.norm(g)
        return GroundTruth(beta, _ScaledIdentityCov(model.m, 1.0), model.sigma2)
    if isinstance(model, EquicorrelatedModel):
        beta = math.sqrt(model.r2 / model.m) * rng.standard_normal(model.m)
        cov = _DiagPlusRankOneCov(model.m, 1.0 - model.rho, model.rho)
        return GroundTruth(beta, cov, model.sigma2)
    if isinstance(model, LatentModel):
        W = make_orthogonal_W(model.m, model.d, rng)
        return latent_to_linear(W, model.theta_vec, model.sigma_xi2)
    if isinstance(model, WeakFeaturesModel):
        m = model.m
        # joint-Gaussian linear equivalent of y ~ N(0,1), x_j|y ~ N(y/sqrt(m), 1/m)
        beta = np.full(m, math.sqrt(m) / (1.0 + m))
        cov = _DiagPlusRankOneCov(m, 1.0 / m, 1.0 / m)
        return GroundTruth(beta, cov, 1.0 / (1.0 + m))
    raise TypeError(f"not a data model: {model!r}")


def realize_truth(model: DataModel, seed: int) -> GroundTruth:
    """Ground truth of the model at this seed, including feature scaling."""
    eta = model.scaling.eta(model.m)
    return _unscaled_truth(model, seed).rescaled(eta)


def sample_dataset(model: DataModel, n: int, seed: int) -> Dataset:
    """Draw a training set of n points from the model (deterministic in seed).

    The returned design is feature-scaled (X/eta) and `truth` describes the
    scaled features, with beta multiplied by eta so predictions are invariant.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    eta = model.scaling.eta(model.m)  # validate scaling before any draws
    truth_raw = _unscaled_truth(model, seed)
    rng = derive_rng(seed, "design")
    if isinstance(model, WeakFeaturesModel):
        # sample from the conditional definition; equals the linear equivalent in law
        y = rng.standard_normal(n)
        X = (y[:, None] + rng.standard_normal((n, model.m))) / math.sqrt(model.m)
    else:
        X = truth_raw.cov.sample(n, rng)
        noise_rng = derive_rng(seed, "noise")
        y = X @ truth_raw.beta + math.sqrt(truth_raw.sigma2) * noise_rng.standard_normal(n)
    return Dataset(X / eta, y, truth_raw.rescaled(eta), model, seed)
