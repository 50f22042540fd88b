"""Experiment sweeps over the overparameterization ratio m/n.

A sweep fixes the training-set size ``n`` and walks a grid of ratios
``gamma``, setting ``m = round(gamma * n)`` per grid point.  Each replicate
samples a fresh dataset, fits one or more estimators, and scores every fit
with the exact Gaussian closed form for the adversarial risk (Monte Carlo
re-evaluation is available as a cross-check).  Replicates aggregate to
quartile rows ready for CSV export; model families with a closed-form
large-m limit also get overlay columns for the limiting risk, the scaled
parameter norm, and the induced adversarial-risk band.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from ._seeding import derive_rng, derive_seed
from .adversarial import (
    AdversarialBudget,
    MonteCarloEstimate,
    RiskReport,
    adv_risk_monte_carlo,
    build_risk_report,
    lp_transfer_bounds,
    risk_bounds,
)
from .asymptotics import (
    equicorrelated_asymptotics,
    isotropic_asymptotics,
    latent_asymptotics,
)
from .datamodels import (
    DataModel,
    EquicorrelatedModel,
    IsotropicModel,
    LatentModel,
    Scaling,
    WeakFeaturesModel,
    latent_effective_params,
    model_from_dict,
    model_to_dict,
    realize_truth,
    sample_dataset,
    weak_features_reference,
)
from .estimators import FittedModel, SolverError, adv_train_fit, lasso_fit, min_norm_fit, ridge_fit
from .norms import INF, as_norm_order, norm_order_label

__all__ = [
    "ESTIMATOR_KINDS",
    "EstimatorSpec",
    "ReplicateRecord",
    "SweepRow",
    "SweepResult",
    "SweepSpec",
    "WeakFeaturesTable",
    "run_regularization_comparison",
    "run_sweep",
    "run_weak_features",
]

ESTIMATOR_KINDS = ("min_norm", "ridge", "lasso", "advtrain")


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator in a sweep: a kind, its penalty, and (for adversarial
    training) the attack order the training objective defends against."""

    kind: str
    delta: float = 0.0
    p: float = INF

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}; choose from {ESTIMATOR_KINDS}")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "p", as_norm_order(self.p))
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be finite and nonnegative, got {self.delta}")

    def label(self) -> str:
        if self.kind == "min_norm":
            return "min_norm"
        if self.kind == "advtrain":
            return f"advtrain_l{norm_order_label(self.p)}(delta={self.delta!r})"
        return f"{self.kind}(delta={self.delta!r})"

    @classmethod
    def from_obj(cls, obj: Union["EstimatorSpec", str, dict]) -> "EstimatorSpec":
        """Coerce a spec from shorthand: "kind[:delta]" / "advtrain[:p[:delta]]"
        strings or {"kind", "delta", "p"} mappings."""
        if isinstance(obj, EstimatorSpec):
            return obj
        if isinstance(obj, str):
            parts = obj.split(":")
            kind = parts[0]
            if kind == "advtrain":
                p = parts[1] if len(parts) > 1 else "inf"
                delta = float(parts[2]) if len(parts) > 2 else 0.0
                return cls(kind, delta, as_norm_order(p))
            if len(parts) > 2:
                raise ValueError(f"estimator shorthand {obj!r} has too many fields")
            return cls(kind, float(parts[1]) if len(parts) > 1 else 0.0)
        if isinstance(obj, dict):
            unknown = set(obj) - {"kind", "delta", "p"}
            if unknown:
                raise ValueError(f"estimator spec has unknown fields {sorted(unknown)}")
            if "kind" not in obj:
                raise ValueError("estimator spec is missing field 'kind'")
            return cls(obj["kind"], float(obj.get("delta", 0.0)), as_norm_order(obj.get("p", "inf")))
        raise TypeError(f"cannot build an estimator spec from {type(obj).__name__}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "delta": self.delta}
        if self.kind == "advtrain":
            d["p"] = norm_order_label(self.p)
        return d

    def fit(self, X: np.ndarray, y: np.ndarray, *, restarts: int = 2, seed: int = 0) -> FittedModel:
        if self.kind == "min_norm":
            return min_norm_fit(X, y)
        if self.kind == "ridge":
            return ridge_fit(X, y, self.delta)
        if self.kind == "lasso":
            return lasso_fit(X, y, self.delta)
        return adv_train_fit(X, y, self.delta, self.p, restarts=restarts, seed=seed)


def _coerce_budget(obj: Union[AdversarialBudget, dict]) -> AdversarialBudget:
    if isinstance(obj, AdversarialBudget):
        return obj
    if isinstance(obj, dict):
        unknown = set(obj) - {"delta", "p"}
        if unknown:
            raise ValueError(f"budget spec has unknown fields {sorted(unknown)}")
        return AdversarialBudget(float(obj.get("delta", 0.0)), as_norm_order(obj.get("p", 2)))
    raise TypeError(f"cannot build an attack budget from {type(obj).__name__}")


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep; serializable to/from a JSON dict."""

    model: DataModel
    n: int
    gamma_grid: tuple[float, ...]
    estimators: tuple[EstimatorSpec, ...] = (EstimatorSpec("min_norm"),)
    budgets: tuple[AdversarialBudget, ...] = (AdversarialBudget(0.0, 2),)
    replicates: int = 10
    seed: int = 0
    mc_samples: int = 0
    keep_replicates: bool = False
    solver_restarts: int = 2

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        object.__setattr__(self, "estimators", tuple(EstimatorSpec.from_obj(e) for e in self.estimators))
        object.__setattr__(self, "budgets", tuple(_coerce_budget(b) for b in self.budgets))
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.gamma_grid:
            raise ValueError("gamma_grid must be non-empty")
        for g in self.gamma_grid:
            if not (math.isfinite(g) and g > 0):
                raise ValueError(f"gamma_grid entries must be positive and finite, got {g}")
        if not self.estimators:
            raise ValueError("estimators must be non-empty")
        labels = [e.label() for e in self.estimators]
        if len(set(labels)) != len(labels):
            raise ValueError("estimator labels must be unique within a sweep")
        if not self.budgets:
            raise ValueError("budgets must be non-empty")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.mc_samples < 0:
            raise ValueError("mc_samples must be nonnegative")
        if self.solver_restarts < 0:
            raise ValueError("solver_restarts must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "n": self.n,
            "gamma_grid": list(self.gamma_grid),
            "estimators": [e.to_dict() for e in self.estimators],
            "budgets": [{"delta": b.delta, "p": norm_order_label(b.p)} for b in self.budgets],
            "replicates": self.replicates,
            "seed": self.seed,
            "mc_samples": self.mc_samples,
            "keep_replicates": self.keep_replicates,
            "solver_restarts": self.solver_restarts,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "SweepSpec":
        if not isinstance(cfg, dict):
            raise ValueError(f"sweep config must be a mapping, got {type(cfg).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"sweep config: unknown fields {sorted(unknown)}")
        for required in ("model", "n", "gamma_grid"):
            if required not in cfg:
                raise ValueError(f"sweep config: missing field '{required}'")
        try:
            model = model_from_dict(cfg["model"])
        except (KeyError, TypeError, ValueError) as err:
            raise ValueError(f"sweep config field 'model': {err}") from err
        kwargs = {}
        for key in ("estimators", "budgets", "replicates", "seed", "mc_samples", "keep_replicates", "solver_restarts"):
            if key in cfg:
                kwargs[key] = cfg[key]
        try:
            return cls(model, int(cfg["n"]), tuple(cfg["gamma_grid"]), **kwargs)
        except (TypeError, ValueError) as err:
            raise ValueError(f"sweep config: {err}") from err


class ReplicateRecord(NamedTuple):
    """One fitted replicate kept verbatim (when SweepSpec.keep_replicates)."""

    gamma: float
    m: int
    replicate: int
    estimator: str
    report: RiskReport


_NAN = math.nan


@dataclass(frozen=True)
class SweepRow:
    """Quartile aggregate of one (gamma, estimator, budget) cell."""

    gamma: float
    m: int
    estimator: str
    p: float
    delta: float
    n_ok: int
    standard_risk_q25: float
    standard_risk_median: float
    standard_risk_q75: float
    adv_risk_q25: float
    adv_risk_median: float
    adv_risk_q75: float
    bound_lower_q25: float
    bound_lower_median: float
    bound_lower_q75: float
    bound_upper_q25: float
    bound_upper_median: float
    bound_upper_q75: float
    norm_l1_q25: float
    norm_l1_median: float
    norm_l1_q75: float
    norm_l2_q25: float
    norm_l2_median: float
    norm_l2_q75: float
    norm_linf_q25: float
    norm_linf_median: float
    norm_linf_q75: float
    mc_risk_median: float = _NAN
    mc_sigma_max: float = _NAN
    asym_risk: float = _NAN
    asym_norm_l2_sq: float = _NAN
    asym_lower: float = _NAN
    asym_upper: float = _NAN


ROW_COLUMNS = tuple(f.name for f in fields(SweepRow))


@dataclass
class SweepResult:
    """Aggregated sweep output plus run notes and the sandwich audit."""

    spec: SweepSpec
    rows: list[SweepRow]
    notes: list[str]
    max_sandwich_violation: float
    records: list[ReplicateRecord]

    def table(self) -> tuple[list[str], list[dict]]:
        """(column names, row dicts) with norm orders rendered as labels."""
        out = []
        for row in self.rows:
            d = asdict(row)
            d["p"] = norm_order_label(row.p)
            out.append(d)
        return list(ROW_COLUMNS), out

    def select(
        self,
        *,
        budget: Optional[AdversarialBudget] = None,
        estimator: Optional[str] = None,
    ) -> list[SweepRow]:
        """Rows matching a budget and/or estimator label, in grid order."""
        rows = self.rows
        if budget is not None:
            rows = [r for r in rows if r.p == budget.p and r.delta == budget.delta]
        if estimator is not None:
            rows = [r for r in rows if r.estimator == estimator]
        return rows


class _CellOut(NamedTuple):
    gi: int
    rep: int
    fits: list[tuple[str, Optional[RiskReport], Optional[list[MonteCarloEstimate]]]]
    notes: list[str]


def _resize_model(model: DataModel, m: int) -> DataModel:
    return replace(model, m=m)


def _run_cell(spec: SweepSpec, model_m: DataModel, gi: int, gamma: float, m: int, rep: int) -> _CellOut:
    ds = sample_dataset(model_m, spec.n, derive_seed(spec.seed, "data", gi, rep))
    fits: list[tuple[str, Optional[RiskReport], Optional[list[MonteCarloEstimate]]]] = []
    notes: list[str] = []
    for ei, est in enumerate(spec.estimators):
        label = est.label()
        try:
            fitted = est.fit(
                ds.X, ds.y, restarts=spec.solver_restarts, seed=derive_seed(spec.seed, "solver", gi, rep, ei)
            )
            beta_hat = fitted.beta_hat
        except SolverError as err:
            if err.best is None:
                notes.append(f"gamma={gamma!r} replicate={rep} {label}: {err}")
                fits.append((label, None, None))
                continue
            notes.append(f"gamma={gamma!r} replicate={rep} {label}: keeping best iterate ({err})")
            beta_hat = err.best.beta_hat
        report = build_risk_report(beta_hat, ds.truth, spec.budgets)
        mc = None
        if spec.mc_samples > 0:
            mc = [
                adv_risk_monte_carlo(
                    beta_hat, ds.truth, budget, spec.mc_samples, derive_seed(spec.seed, "mc", gi, rep, ei, bi)
                )
                for bi, budget in enumerate(spec.budgets)
            ]
        fits.append((label, report, mc))
    return _CellOut(gi, rep, fits, notes)


def _quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    if not len(values):
        return _NAN, _NAN, _NAN
    q25, med, q75 = np.quantile(np.asarray(values, dtype=float), [0.25, 0.5, 0.75])
    return float(q25), float(med), float(q75)


def _asymptotic_overlay(model: DataModel, n: int, m: int) -> Optional[tuple[float, float]]:
    """(limit risk, limit squared l2 norm after feature scaling), if defined."""
    if m == n:
        return None
    gamma = m / n
    eta = model.scaling.eta(m)
    if isinstance(model, IsotropicModel):
        pt = isotropic_asymptotics(gamma, model.r2, model.sigma2)
        risk, l2_sq = pt.risk, pt.l2norm_sq
    elif isinstance(model, EquicorrelatedModel):
        pt = equicorrelated_asymptotics(gamma, model.rho, model.r2, model.sigma2)
        risk, l2_sq = pt.risk, pt.l2norm_sq
    elif isinstance(model, LatentModel):
        theta_sq = float(model.theta_vec @ model.theta_vec)
        r2, sigma2 = latent_effective_params(model.d / m, theta_sq, model.sigma_xi2)
        risk, l2_sq, _ = latent_asymptotics(model.d / m, gamma, r2, sigma2)
    else:
        return None
    return risk, eta * eta * l2_sq


def _overlay_band(risk: float, l2_sq: float, budget: AdversarialBudget, m: int) -> tuple[float, float]:
    """Adversarial-risk band implied by the limiting risk and scaled l2 norm."""
    if budget.delta == 0.0:
        return risk, risk
    if budget.p == 2.0:
        return tuple(risk_bounds(risk, l2_sq, budget.delta))
    if budget.p in (1.0, INF):
        return tuple(lp_transfer_bounds(risk, l2_sq, budget.delta, m, budget.p))
    return _NAN, _NAN


def run_sweep(spec: SweepSpec, *, threads: Optional[int] = None) -> SweepResult:
    """Run the sweep: sample, fit, score, and aggregate each grid cell.

    Cells are independent jobs with seeds derived from (seed, grid index,
    replicate), so the result is bit-identical for any thread count.  Solver
    failures are recorded in `notes` and shrink that cell's n_ok instead of
    aborting the sweep.  gamma == 1 grid points are skipped with a note.
    """
    notes: list[str] = []
    live: list[tuple[int, float, int, DataModel]] = []
    for gi, gamma in enumerate(spec.gamma_grid):
        if gamma == 1.0:
            notes.append(f"grid index {gi}: gamma=1 skipped (interpolation threshold)")
            continue
        m = round(gamma * spec.n)
        if m < 1:
            raise ValueError(f"grid index {gi}: gamma={gamma!r} gives m={m} < 1 at n={spec.n}")
        try:
            model_m = _resize_model(spec.model, m)
        except ValueError as err:
            raise ValueError(f"grid index {gi}: gamma={gamma!r} gives m={m}: {err}") from err
        live.append((gi, gamma, m, model_m))

    jobs = [(model_m, gi, gamma, m, rep) for (gi, gamma, m, model_m) in live for rep in range(spec.replicates)]
    workers = max(1, threads if threads is not None else (os.cpu_count() or 1))
    if workers == 1 or len(jobs) <= 1:
        celled = [_run_cell(spec, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            celled = list(pool.map(lambda job: _run_cell(spec, *job), jobs))

    by_cell: dict[tuple[int, str], list[tuple[int, Optional[RiskReport], Optional[list[MonteCarloEstimate]]]]] = {}
    for cell in celled:
        notes.extend(cell.notes)
        for label, report, mc in cell.fits:
            by_cell.setdefault((cell.gi, label), []).append((cell.rep, report, mc))

    rows: list[SweepRow] = []
    records: list[ReplicateRecord] = []
    max_violation = 0.0
    for gi, gamma, m, _ in live:
        overlay = _asymptotic_overlay(spec.model, spec.n, m)
        if overlay is None and isinstance(spec.model, (IsotropicModel, EquicorrelatedModel, LatentModel)):
            notes.append(f"gamma={gamma!r}: m rounds to n, no asymptotic overlay at the threshold")
        for est in spec.estimators:
            label = est.label()
            entries = by_cell.get((gi, label), [])
            reports = [r for _, r, _ in entries if r is not None]
            n_ok = len(reports)
            if spec.keep_replicates:
                records.extend(
                    ReplicateRecord(gamma, m, rep, label, r) for rep, r, _ in entries if r is not None
                )
            for report in reports:
                for e in report.entries:
                    scale = max(1.0, abs(e.adv_risk))
                    gap = max(e.lower - e.adv_risk, e.adv_risk - e.upper)
                    max_violation = max(max_violation, gap / scale)
            std_q = _quartiles([r.standard_risk for r in reports])
            l1_q = _quartiles([r.norm_l1 for r in reports])
            l2_q = _quartiles([r.norm_l2 for r in reports])
            linf_q = _quartiles([r.norm_linf for r in reports])
            for bi, budget in enumerate(spec.budgets):
                adv_q = _quartiles([r.entries[bi].adv_risk for r in reports])
                low_q = _quartiles([r.entries[bi].lower for r in reports])
                upp_q = _quartiles([r.entries[bi].upper for r in reports])
                mc_med, mc_sig = _NAN, _NAN
                if spec.mc_samples > 0 and n_ok:
                    paired = [(r.entries[bi].adv_risk, mc[bi]) for _, r, mc in entries if r is not None]
                    mc_med = float(np.median([mc.estimate for _, mc in paired]))
                    mc_sig = max(abs(mc.estimate - exact) / max(mc.std_error, 1e-300) for exact, mc in paired)
                asym = (_NAN, _NAN, _NAN, _NAN)
                if overlay is not None and est.kind == "min_norm":
                    band = _overlay_band(overlay[0], overlay[1], budget, m)
                    asym = (overlay[0], overlay[1], band[0], band[1])
                rows.append(
                    SweepRow(
                        gamma,
                        m,
                        label,
                        budget.p,
                        budget.delta,
                        n_ok,
                        *std_q,
                        *adv_q,
                        *low_q,
                        *upp_q,
                        *l1_q,
                        *l2_q,
                        *linf_q,
                        mc_risk_median=mc_med,
                        mc_sigma_max=mc_sig,
                        asym_risk=asym[0],
                        asym_norm_l2_sq=asym[1],
                        asym_lower=asym[2],
                        asym_upper=asym[3],
                    )
                )
    return SweepResult(spec, rows, notes, max_violation, records)


_REG_COMPARISON_REQUIRED = (
    ("ridge", None),
    ("lasso", None),
    ("advtrain", 2.0),
    ("advtrain", INF),
)


def run_regularization_comparison(
    spec: SweepSpec, delta_grid: Sequence[float], *, threads: Optional[int] = None
) -> SweepResult:
    """Sweep every estimator in the spec across a grid of penalty strengths.

    The spec's estimator list must cover ridge, lasso, and adversarial
    training against both l2 and linf attacks; each is re-run once per delta
    in `delta_grid` (its own delta field is ignored).  Features are scaled by
    sqrt(m), the regime where penalty choice decides whether the l1 norm of
    the fit keeps growing with m.
    """
    deltas = [float(d) for d in delta_grid]
    if not deltas:
        raise ValueError("delta_grid must be non-empty")
    for d in deltas:
        if not (d >= 0.0 and math.isfinite(d)):
            raise ValueError(f"delta_grid entries must be finite and nonnegative, got {d}")
    have = {(e.kind, e.p if e.kind == "advtrain" else None) for e in spec.estimators}
    missing = [kind if p is None else f"{kind}(p={norm_order_label(p)})" for kind, p in _REG_COMPARISON_REQUIRED if (kind, p) not in have]
    if missing:
        raise ValueError(f"regularization comparison needs estimators {missing}")
    notes = []
    model = spec.model
    if model.scaling is not Scaling.SQRT_M:
        model = replace(model, scaling=Scaling.SQRT_M)
        notes.append(f"input scaling {spec.model.scaling.value!r} replaced by 'sqrt_m' for the comparison")
    expanded: list[EstimatorSpec] = []
    for delta in deltas:
        for est in spec.estimators:
            if est.kind == "min_norm":
                continue
            expanded.append(replace(est, delta=delta))
    if any(e.kind == "min_norm" for e in spec.estimators):
        expanded.append(EstimatorSpec("min_norm"))
    result = run_sweep(replace(spec, model=model, estimators=tuple(expanded)), threads=threads)
    result.notes[:0] = notes
    return result


@dataclass(frozen=True)
class WeakFeaturesTable:
    """Closed-form risk table for the many-weak-features predictor, with a
    Monte-Carlo confirmation column for the risk."""

    m_values: tuple[int, ...]
    delta: float
    risk: tuple[float, ...]
    norm_l1: tuple[float, ...]
    linf_lower: tuple[float, ...]
    mc_risk: tuple[float, ...]
    mc_se: tuple[float, ...]
    samples: int
    seed: int

    def as_columns(self) -> dict:
        return {
            "m": self.m_values,
            "risk": self.risk,
            "norm_l1": self.norm_l1,
            "linf_lower": self.linf_lower,
            "mc_risk": self.mc_risk,
            "mc_se": self.mc_se,
        }


def run_weak_features(
    m_grid: Sequence[int], delta: float, *, samples: int = 20_000, seed: int = 0
) -> WeakFeaturesTable:
    """Evaluate the equal-weights predictor on the weak-features model.

    Per m the table holds its exact standard risk 1/m, its l1 norm sqrt(m),
    and the linf adversarial lower bound 1/m + delta^2 m, plus a Monte-Carlo
    estimate of the risk from fresh test draws.  The risk falls while the
    lower bound eventually grows: adding weak features helps accuracy but
    not linf robustness.
    """
    m_values = [int(m) for m in m_grid]
    if not m_values:
        raise ValueError("m_grid must be non-empty")
    if any(m < 1 for m in m_values):
        raise ValueError("m_grid entries must be positive integers")
    if not (delta >= 0.0 and math.isfinite(delta)):
        raise ValueError(f"delta must be finite and nonnegative, got {delta}")
    if samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    risk_col, l1_col, lower_col, mc_col, se_col = [], [], [], [], []
    for i, m in enumerate(m_values):
        predictor, risk, norm_l1 = weak_features_reference(m)
        lower, _ = risk_bounds(risk, norm_l1 * norm_l1, delta)
        truth = realize_truth(WeakFeaturesModel(m), seed)
        total = 0.0
        total_sq = 0.0
        done = 0
        chunk_index = 0
        while done < samples:
            k = min(5000, samples - done)
            rng = derive_rng(seed, "weak_features", i, chunk_index)
            X0, y0 = truth.sample_points(k, rng)
            sq = (y0 - X0 @ predictor) ** 2
            total += float(sq.sum())
            total_sq += float((sq * sq).sum())
            done += k
            chunk_index += 1
        mean = total / samples
        var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
        risk_col.append(risk)
        l1_col.append(norm_l1)
        lower_col.append(lower)
        mc_col.append(mean)
        se_col.append(math.sqrt(var / samples))
    return WeakFeaturesTable(
        tuple(m_values),
        float(delta),
        tuple(risk_col),
        tuple(l1_col),
        tuple(lower_col),
        tuple(mc_col),
        tuple(se_col),
        samples,
        seed,
    )
