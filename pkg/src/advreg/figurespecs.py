"""Built-in figure definitions behind the ``figure`` CLI command.

Each figure id (fig1..fig8, s2..s9) maps to a FigureJob: the sweeps — or the
projection experiment, or pure closed-form curve panels — that produce its
data, plus one PanelSpec per output CSV saying which rows the panel keeps and
how its series split.  Panels carry rendering hints (y quantity, grouping
key, series labels) in their CSV header metadata so a downstream plotter can
draw them without recomputing any statistic.  run_figure executes a job and
writes ``<directory>/<panel>.csv`` for every panel plus a ``manifest.json``
recording the full configuration and the per-sweep notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ._seeding import derive_seed
from .adversarial import AdversarialBudget
from .asymptotics import equicorrelated_asymptotics, isotropic_asymptotics
from .concentration import projection_experiment
from .csvio import MANIFEST_NAME, write_manifest, write_table
from .datamodels import EquicorrelatedModel, IsotropicModel, LatentModel, Scaling
from .norms import INF, as_norm_order, norm_order_label
from .sweeps import (
    ROW_COLUMNS,
    EstimatorSpec,
    SweepResult,
    SweepSpec,
    run_regularization_comparison,
    run_sweep,
)

__all__ = [
    "CurveSeries",
    "FIGURE_IDS",
    "FigureJob",
    "PanelSpec",
    "ProjectionSpec",
    "figure_job",
    "run_figure",
]

# Gamma grids are geometric so both sides of the m = n pole get even log-axis
# coverage; the point counts are chosen so no grid point rounds m to exactly n.
GAMMA_GRID_WIDE = tuple(float(g) for g in np.geomspace(0.1, 10.0, 24))
GAMMA_GRID_LATENT = tuple(float(g) for g in np.geomspace(0.3, 10.0, 13))
GAMMA_GRID_COMPARE = tuple(float(g) for g in np.geomspace(0.5, 10.0, 8))
CURVE_GAMMA_GRID = tuple(float(g) for g in np.geomspace(0.1, 10.0, 200))

_PANEL_KINDS = ("sweep", "curves", "projection")
_GROUP_KEYS = ("", "delta", "p", "sweep", "estimator")
_CURVE_QUANTITIES = ("risk", "norm_l2_sq")

_LATENT_DIM = 20


@dataclass(frozen=True)
class CurveSeries:
    """One closed-form series evaluated along the curve panel's gamma grid.

    rho = 0 selects the independent-features limit; a positive rho the
    equicorrelated one.  For norm panels the value is eta(m)^2 * L2 so the
    series reflects the chosen input scaling.
    """

    label: str
    r2: float
    sigma2: float = 1.0
    rho: float = 0.0
    scaling: Scaling = Scaling.UNIT

    def __post_init__(self):
        if not self.label:
            raise ValueError("curve series needs a label")
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if self.r2 < 0 or self.sigma2 < 0:
            raise ValueError("r2 and sigma2 must be nonnegative")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "r2": self.r2,
            "sigma2": self.sigma2,
            "rho": self.rho,
            "scaling": self.scaling.value,
        }


@dataclass(frozen=True)
class ProjectionSpec:
    """Row-space projection experiment: l2/l1 norms vs subspace rank."""

    m: int
    n_grid: tuple[int, ...]
    replicates: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.m < 1:
            raise ValueError("m must be positive")
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        if any(not 1 <= n <= self.m for n in self.n_grid):
            raise ValueError("n_grid entries must lie in 1..m")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PanelSpec:
    """One CSV of a figure: the rows it keeps and how its series split.

    Sweep panels filter the rows of the referenced sweeps by attack budget
    (delta, p) and/or estimator kind; ``group_by`` names the column a plotter
    should split series on, and ``series_labels`` (aligned with ``sweeps``)
    label the series when the split is by sweep.  Curves panels evaluate
    closed-form series instead; projection panels read the job's projection
    experiment.
    """

    name: str
    kind: str = "sweep"
    sweeps: tuple[int, ...] = (0,)
    delta: Optional[float] = None
    p: Optional[float] = None
    estimator_kinds: tuple[str, ...] = ()
    y: str = "adv_risk"
    group_by: str = ""
    series_labels: tuple[str, ...] = ()
    curves: tuple[CurveSeries, ...] = ()
    curves_n: int = 300

    def __post_init__(self):
        if not self.name or not all(c.isalnum() or c in "._-" for c in self.name):
            raise ValueError(f"panel name must be a simple file stem, got {self.name!r}")
        if self.kind not in _PANEL_KINDS:
            raise ValueError(f"panel kind must be one of {_PANEL_KINDS}, got {self.kind!r}")
        if self.group_by not in _GROUP_KEYS:
            raise ValueError(f"group_by must be one of {_GROUP_KEYS}, got {self.group_by!r}")
        sweeps = tuple(int(i) for i in self.sweeps) if self.kind == "sweep" else ()
        object.__setattr__(self, "sweeps", sweeps)
        object.__setattr__(self, "estimator_kinds", tuple(self.estimator_kinds))
        object.__setattr__(self, "series_labels", tuple(self.series_labels))
        object.__setattr__(self, "curves", tuple(self.curves))
        if self.delta is not None:
            object.__setattr__(self, "delta", float(self.delta))
            if self.delta < 0:
                raise ValueError("delta filter must be nonnegative")
        if self.p is not None:
            object.__setattr__(self, "p", as_norm_order(self.p))
        if self.series_labels and len(self.series_labels) != len(self.sweeps):
            raise ValueError("series_labels must align with the panel's sweep indices")
        if self.kind == "curves":
            if not self.curves:
                raise ValueError("curves panel needs at least one series")
            if self.y not in _CURVE_QUANTITIES:
                raise ValueError(f"curves panels support y in {_CURVE_QUANTITIES}, got {self.y!r}")
            if self.curves_n < 1:
                raise ValueError("curves_n must be positive")
            labels = [c.label for c in self.curves]
            if len(set(labels)) != len(labels):
                raise ValueError("curve series labels must be unique")
        elif self.curves:
            raise ValueError("curve series only belong to curves panels")
        if self.kind == "sweep" and not self.sweeps:
            raise ValueError(f"panel {self.name!r} references no sweeps")

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "kind": self.kind,
            "y": self.y,
            "group_by": self.group_by,
        }
        if self.kind == "sweep":
            d["sweeps"] = list(self.sweeps)
            if self.delta is not None:
                d["delta"] = self.delta
            if self.p is not None:
                d["p"] = norm_order_label(self.p)
            if self.estimator_kinds:
                d["estimator_kinds"] = list(self.estimator_kinds)
            if self.series_labels:
                d["series_labels"] = list(self.series_labels)
        elif self.kind == "curves":
            d["curves"] = [c.to_dict() for c in self.curves]
            d["curves_n"] = self.curves_n
        return d


@dataclass(frozen=True)
class FigureJob:
    """Everything needed to produce one figure's data directory."""

    figure_id: str
    title: str
    seed: int
    sweeps: tuple[SweepSpec, ...] = ()
    panels: tuple[PanelSpec, ...] = ()
    projection: Optional[ProjectionSpec] = None
    comparison_deltas: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sweeps", tuple(self.sweeps))
        object.__setattr__(self, "panels", tuple(self.panels))
        object.__setattr__(
            self, "comparison_deltas", tuple(float(d) for d in self.comparison_deltas)
        )
        if not self.figure_id:
            raise ValueError("figure_id must not be empty")
        if not self.panels:
            raise ValueError("a figure needs at least one panel")
        names = [p.name for p in self.panels]
        if len(set(names)) != len(names):
            raise ValueError(f"panel names must be unique, got {names}")
        for panel in self.panels:
            if panel.kind == "sweep":
                for si in panel.sweeps:
                    if not 0 <= si < len(self.sweeps):
                        raise ValueError(
                            f"panel {panel.name!r} references sweep {si}, "
                            f"but the job has {len(self.sweeps)} sweeps"
                        )
            elif panel.kind == "projection" and self.projection is None:
                raise ValueError(f"panel {panel.name!r} needs a projection experiment")
        if self.comparison_deltas and len(self.sweeps) != 1:
            raise ValueError("a regularization-comparison job carries exactly one sweep")

    def to_dict(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "title": self.title,
            "seed": self.seed,
            "sweeps": [s.to_dict() for s in self.sweeps],
            "panels": [p.to_dict() for p in self.panels],
            "projection": None if self.projection is None else self.projection.to_dict(),
            "comparison_deltas": list(self.comparison_deltas),
        }


# ---------------------------------------------------------------------------
# figure definitions
# ---------------------------------------------------------------------------


def _unit_theta(d: int = _LATENT_DIM) -> tuple[float, ...]:
    return tuple([1.0 / math.sqrt(d)] * d)


def _latent_model(scaling: Scaling, sigma_xi2: float = 0.1) -> LatentModel:
    # The initial m is a placeholder; sweeps resize the model per grid point.
    return LatentModel(
        m=200, d=_LATENT_DIM, theta=_unit_theta(), sigma_xi2=sigma_xi2, scaling=scaling
    )


_SCALING_LABELS = {
    Scaling.UNIT: "eta=1",
    Scaling.SQRT_LOG: "eta=sqrt_log",
    Scaling.SQRT_M: "eta=sqrt_m",
}


def _fig1(seed: int) -> FigureJob:
    spec = SweepSpec(
        model=_latent_model(Scaling.SQRT_M),
        n=200,
        gamma_grid=GAMMA_GRID_LATENT,
        budgets=(AdversarialBudget(0.1, 2), AdversarialBudget(0.1, INF)),
        replicates=10,
        seed=derive_seed(seed, "sweep", 0),
    )
    panel = PanelSpec("risk", group_by="p")
    return FigureJob(
        "fig1",
        "Standard, l2-adversarial, and linf-adversarial risk as features grow",
        seed,
        (spec,),
        (panel,),
    )


def _fig2(seed: int) -> FigureJob:
    spec = SweepSpec(
        model=IsotropicModel(m=300, r2=2.0, sigma2=1.0),
        n=300,
        gamma_grid=GAMMA_GRID_WIDE,
        budgets=(
            AdversarialBudget(0.0, 2),
            AdversarialBudget(1.0, 2),
            AdversarialBudget(2.0, 2),
        ),
        replicates=10,
        seed=derive_seed(seed, "sweep", 0),
    )
    panels = tuple(
        PanelSpec(f"delta{i}", delta=float(i), p=2.0) for i in range(3)
    )
    return FigureJob(
        "fig2",
        "l2-adversarial risk of the minimum-norm fit, independent features",
        seed,
        (spec,),
        panels,
    )


def _fig3(seed: int) -> FigureJob:
    spec = SweepSpec(
        model=IsotropicModel(m=100, r2=1.0, sigma2=1.0),
        n=100,
        gamma_grid=GAMMA_GRID_WIDE,
        budgets=(
            AdversarialBudget(2.0, 1),
            AdversarialBudget(2.0, 2),
            AdversarialBudget(2.0, INF),
        ),
        replicates=10,
        seed=derive_seed(seed, "sweep", 0),
    )
    panels = (
        PanelSpec("risk", group_by="p"),
        PanelSpec("norm", y="norm", group_by="p"),
    )
    return FigureJob(
        "fig3",
        "Adversarial risk and parameter norm across attack geometries",
        seed,
        (spec,),
        panels,
    )


def _fig4(seed: int) -> FigureJob:
    projection = ProjectionSpec(
        m=2000,
        n_grid=tuple(range(100, 1001, 100)),
        replicates=100,
        seed=derive_seed(seed, "projection"),
    )
    panel = PanelSpec("projection", kind="projection", y="norm")
    return FigureJob(
        "fig4",
        "Norms of a fixed direction projected onto random row spaces",
        seed,
        (),
        (panel,),
        projection=projection,
    )


def _fig5(seed: int) -> FigureJob:
    scalings = (Scaling.SQRT_M, Scaling.SQRT_LOG)
    sweeps = tuple(
        SweepSpec(
            model=IsotropicModel(m=100, r2=1.0, sigma2=1.0, scaling=s),
            n=100,
            gamma_grid=GAMMA_GRID_WIDE,
            budgets=(AdversarialBudget(0.1, INF),),
            replicates=10,
            seed=derive_seed(seed, "sweep", i),
        )
        for i, s in enumerate(scalings)
    )
    panel = PanelSpec(
        "risk",
        sweeps=(0, 1),
        group_by="sweep",
        series_labels=tuple(_SCALING_LABELS[s] for s in scalings),
    )
    return FigureJob(
        "fig5",
        "linf-adversarial risk under rescaled inputs, independent features",
        seed,
        sweeps,
        (panel,),
    )


def _latent_pair_job(figure_id: str, title: str, seed: int) -> FigureJob:
    scalings = (Scaling.SQRT_M, Scaling.SQRT_LOG)
    sweeps = tuple(
        SweepSpec(
            model=_latent_model(s),
            n=200,
            gamma_grid=GAMMA_GRID_LATENT,
            budgets=(AdversarialBudget(0.1, 2), AdversarialBudget(0.1, INF)),
            replicates=10,
            seed=derive_seed(seed, "sweep", i),
        )
        for i, s in enumerate(scalings)
    )
    labels = tuple(_SCALING_LABELS[s] for s in scalings)
    panels = (
        PanelSpec("l2", sweeps=(0, 1), p=2.0, group_by="sweep", series_labels=labels),
        PanelSpec("linf", sweeps=(0, 1), p=INF, group_by="sweep", series_labels=labels),
    )
    return FigureJob(figure_id, title, seed, sweeps, panels)


def _fig6(seed: int) -> FigureJob:
    return _latent_pair_job(
        "fig6", "Adversarial risk for latent-factor data with empirical bound bands", seed
    )


def _comparison_spec(seed: int, budgets: tuple[AdversarialBudget, ...]) -> SweepSpec:
    return SweepSpec(
        model=_latent_model(Scaling.SQRT_M),
        n=100,
        gamma_grid=GAMMA_GRID_COMPARE,
        estimators=(
            EstimatorSpec("ridge"),
            EstimatorSpec("lasso"),
            EstimatorSpec("advtrain", p=2.0),
            EstimatorSpec("advtrain", p=INF),
        ),
        budgets=budgets,
        replicates=6,
        seed=derive_seed(seed, "sweep", 0),
    )


def _fig7(seed: int) -> FigureJob:
    spec = _comparison_spec(seed, (AdversarialBudget(0.0, 2),))
    kinds = ("ridge", "lasso", "advtrain_l2", "advtrain_linf")
    panels = tuple(
        PanelSpec(k, estimator_kinds=(k,), y="norm_l1", group_by="estimator")
        for k in kinds
    )
    return FigureJob(
        "fig7",
        "l1 parameter norm of four regularized fits across penalty strengths",
        seed,
        (spec,),
        panels,
        comparison_deltas=(0.001, 0.01, 0.1, 1.0),
    )


def _fig8(seed: int) -> FigureJob:
    spec = _comparison_spec(seed, (AdversarialBudget(0.01, INF),))
    panel = PanelSpec("risk", group_by="estimator")
    return FigureJob(
        "fig8",
        "linf-adversarial risk of four regularized fits at one penalty strength",
        seed,
        (spec,),
        (panel,),
        comparison_deltas=(0.01,),
    )


def _s2(seed: int) -> FigureJob:
    risk_curves = tuple(
        CurveSeries(f"r2={r2:g}", r2=r2) for r2 in (0.5, 1.0, 2.0, 4.0)
    )
    norm_curves = tuple(
        CurveSeries(_SCALING_LABELS[s], r2=2.0, scaling=s)
        for s in (Scaling.UNIT, Scaling.SQRT_LOG, Scaling.SQRT_M)
    )
    panels = (
        PanelSpec("risk", kind="curves", y="risk", curves=risk_curves),
        PanelSpec("norm", kind="curves", y="norm_l2_sq", curves=norm_curves, curves_n=300),
    )
    return FigureJob(
        "s2",
        "Closed-form risk and norm curves for independent features",
        seed,
        (),
        panels,
    )


def _s3(seed: int) -> FigureJob:
    r2_values = (0.5, 1.0, 2.0)
    scalings = (Scaling.UNIT, Scaling.SQRT_LOG, Scaling.SQRT_M)
    sweeps = []
    panels = []
    for r2 in r2_values:
        for scaling in scalings:
            idx = len(sweeps)
            sweeps.append(
                SweepSpec(
                    model=IsotropicModel(m=300, r2=r2, sigma2=1.0, scaling=scaling),
                    n=300,
                    gamma_grid=GAMMA_GRID_WIDE,
                    budgets=(
                        AdversarialBudget(0.0, 2),
                        AdversarialBudget(1.0, 2),
                        AdversarialBudget(2.0, 2),
                    ),
                    replicates=10,
                    seed=derive_seed(seed, "sweep", idx),
                )
            )
            panels.append(
                PanelSpec(f"r2_{r2:g}_{scaling.value}", sweeps=(idx,), group_by="delta")
            )
    return FigureJob(
        "s3",
        "l2-adversarial risk across signal strengths and input scalings",
        seed,
        tuple(sweeps),
        tuple(panels),
    )


def _equicorr_job(
    figure_id: str,
    title: str,
    seed: int,
    budgets: tuple[AdversarialBudget, ...],
    group_by: str,
) -> FigureJob:
    scalings = (Scaling.UNIT, Scaling.SQRT_LOG, Scaling.SQRT_M)
    sweeps = tuple(
        SweepSpec(
            model=EquicorrelatedModel(m=300, rho=0.5, r2=4.0, sigma2=1.0, scaling=s),
            n=300,
            gamma_grid=GAMMA_GRID_WIDE,
            budgets=budgets,
            replicates=10,
            seed=derive_seed(seed, "sweep", i),
        )
        for i, s in enumerate(scalings)
    )
    panels = tuple(
        PanelSpec(s.value, sweeps=(i,), group_by=group_by)
        for i, s in enumerate(scalings)
    )
    return FigureJob(figure_id, title, seed, sweeps, panels)


def _s4(seed: int) -> FigureJob:
    return _equicorr_job(
        "s4",
        "l2-adversarial risk with equicorrelated features",
        seed,
        (
            AdversarialBudget(0.0, 2),
            AdversarialBudget(1.0, 2),
            AdversarialBudget(2.0, 2),
        ),
        "delta",
    )


def _s5(seed: int) -> FigureJob:
    return _equicorr_job(
        "s5",
        "Adversarial risk with equicorrelated features across attack geometries",
        seed,
        (
            AdversarialBudget(2.0, 1),
            AdversarialBudget(2.0, 2),
            AdversarialBudget(2.0, INF),
        ),
        "p",
    )


def _s6(seed: int) -> FigureJob:
    scalings = (Scaling.SQRT_M, Scaling.SQRT_LOG)
    sweeps = tuple(
        SweepSpec(
            model=EquicorrelatedModel(m=100, rho=0.5, r2=1.0, sigma2=1.0, scaling=s),
            n=100,
            gamma_grid=GAMMA_GRID_WIDE,
            budgets=(AdversarialBudget(0.1, INF),),
            replicates=10,
            seed=derive_seed(seed, "sweep", i),
        )
        for i, s in enumerate(scalings)
    )
    labels = tuple(_SCALING_LABELS[s] for s in scalings)
    panels = (
        PanelSpec("risk", sweeps=(0, 1), group_by="sweep", series_labels=labels),
        PanelSpec("norm", sweeps=(0, 1), y="norm_l1", group_by="sweep", series_labels=labels),
    )
    return FigureJob(
        "s6",
        "linf-adversarial risk and l1 norm with equicorrelated features",
        seed,
        sweeps,
        panels,
    )


def _s7(seed: int) -> FigureJob:
    return _latent_pair_job(
        "s7", "Adversarial risk for latent-factor data with limiting curves", seed
    )


def _s8(seed: int) -> FigureJob:
    scalings = (Scaling.SQRT_M, Scaling.SQRT_LOG)
    noise_levels = (0.01, 0.1, 1.0)
    sweeps = []
    for scaling in scalings:
        for sigma_xi2 in noise_levels:
            sweeps.append(
                SweepSpec(
                    model=_latent_model(scaling, sigma_xi2=sigma_xi2),
                    n=200,
                    gamma_grid=GAMMA_GRID_LATENT,
                    budgets=(AdversarialBudget(0.1, 2), AdversarialBudget(0.1, INF)),
                    replicates=10,
                    seed=derive_seed(seed, "sweep", len(sweeps)),
                )
            )
    labels = tuple(f"sigma_xi2={v:g}" for v in noise_levels)
    panels = []
    for si, scaling in enumerate(scalings):
        indices = tuple(range(si * len(noise_levels), (si + 1) * len(noise_levels)))
        for p in (2.0, INF):
            panels.append(
                PanelSpec(
                    f"p{norm_order_label(p)}_{scaling.value}",
                    sweeps=indices,
                    p=p,
                    group_by="sweep",
                    series_labels=labels,
                )
            )
    return FigureJob(
        "s8",
        "Latent-factor adversarial risk across observation-noise levels",
        seed,
        tuple(sweeps),
        tuple(panels),
    )


def _s9(seed: int) -> FigureJob:
    scalings = (Scaling.SQRT_M, Scaling.SQRT_LOG)
    deltas = (0.0, 0.1, 1.0)
    budgets = tuple(
        AdversarialBudget(d, p) for p in (2, INF) for d in deltas
    )
    sweeps = tuple(
        SweepSpec(
            model=_latent_model(s),
            n=200,
            gamma_grid=GAMMA_GRID_LATENT,
            budgets=budgets,
            replicates=10,
            seed=derive_seed(seed, "sweep", i),
        )
        for i, s in enumerate(scalings)
    )
    panels = []
    for si, scaling in enumerate(scalings):
        for p in (2.0, INF):
            panels.append(
                PanelSpec(
                    f"p{norm_order_label(p)}_{scaling.value}",
                    sweeps=(si,),
                    p=p,
                    group_by="delta",
                )
            )
    return FigureJob(
        "s9",
        "Latent-factor adversarial risk across attack budgets",
        seed,
        sweeps,
        tuple(panels),
    )


_FIGURES: dict[str, tuple[Callable[[int], FigureJob], int]] = {
    "fig1": (_fig1, 11),
    "fig2": (_fig2, 12),
    "fig3": (_fig3, 13),
    "fig4": (_fig4, 14),
    "fig5": (_fig5, 15),
    "fig6": (_fig6, 16),
    "fig7": (_fig7, 17),
    "fig8": (_fig8, 18),
    "s2": (_s2, 22),
    "s3": (_s3, 23),
    "s4": (_s4, 24),
    "s5": (_s5, 25),
    "s6": (_s6, 26),
    "s7": (_s7, 27),
    "s8": (_s8, 28),
    "s9": (_s9, 29),
}

FIGURE_IDS = tuple(_FIGURES)


def figure_job(
    figure_id: str,
    *,
    seed: Optional[int] = None,
    replicates: Optional[int] = None,
    mc_samples: Optional[int] = None,
) -> FigureJob:
    """Build the job for a figure id, with optional overrides.

    seed replaces the figure's default root seed (every sweep and the
    projection experiment derive their own streams from it); replicates and
    mc_samples override the corresponding field of every sweep (replicates
    also applies to the projection experiment).
    """
    try:
        builder, default_seed = _FIGURES[figure_id]
    except KeyError:
        known = ", ".join(FIGURE_IDS)
        raise ValueError(f"unknown figure id {figure_id!r}; known ids: {known}") from None
    job = builder(default_seed if seed is None else int(seed))
    if replicates is not None:
        job = replace(
            job,
            sweeps=tuple(replace(s, replicates=int(replicates)) for s in job.sweeps),
            projection=None
            if job.projection is None
            else replace(job.projection, replicates=int(replicates)),
        )
    if mc_samples is not None:
        job = replace(
            job,
            sweeps=tuple(replace(s, mc_samples=int(mc_samples)) for s in job.sweeps),
        )
    return job


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _estimator_kind(label: str) -> str:
    """'lasso(delta=0.01)' -> 'lasso'; 'min_norm' stays as is."""
    return label.split("(", 1)[0]


def _curve_point(gamma: float, series: CurveSeries):
    if series.rho > 0.0:
        return equicorrelated_asymptotics(gamma, series.rho, series.r2, series.sigma2)
    return isotropic_asymptotics(gamma, series.r2, series.sigma2)


def _curves_table(panel: PanelSpec) -> tuple[list[str], list[dict], dict]:
    rows = []
    for series in panel.curves:
        for gamma in CURVE_GAMMA_GRID:
            if panel.y == "norm_l2_sq":
                m = round(gamma * panel.curves_n)
                if m <= 0 or m == panel.curves_n:
                    continue
                g = m / panel.curves_n
                value = series.scaling.eta(m) ** 2 * _curve_point(g, series).l2norm_sq
                x = g
            else:
                value = _curve_point(gamma, series).risk
                x = gamma
            rows.append({"series": series.label, "gamma": x, "value": value})
    metadata = {
        "gamma_grid": {
            "start": CURVE_GAMMA_GRID[0],
            "stop": CURVE_GAMMA_GRID[-1],
            "count": len(CURVE_GAMMA_GRID),
            "spacing": "geometric",
        }
    }
    return ["series", "gamma", "value"], rows, metadata


def _projection_rows(spec: ProjectionSpec) -> tuple[list[str], list[dict], dict]:
    l2_series, ratio_series, c_hat = projection_experiment(
        spec.m, spec.n_grid, spec.replicates, spec.seed
    )
    rows = []
    for i, n in enumerate(spec.n_grid):
        root = math.sqrt(n)
        rows.append(
            {
                "n": n,
                "m": spec.m,
                "l2_q25": float(l2_series.q25[i]),
                "l2_median": float(l2_series.median[i]),
                "l2_q75": float(l2_series.q75[i]),
                "l2_ref": math.sqrt(n / spec.m),
                "l1_q25": float(ratio_series.q25[i]) * root,
                "l1_median": float(ratio_series.median[i]) * root,
                "l1_q75": float(ratio_series.q75[i]) * root,
                "l1_ref": c_hat * root,
            }
        )
    columns = list(rows[0])
    metadata = {"projection": spec.to_dict(), "c_hat": c_hat}
    return columns, rows, metadata


def _sweep_panel_rows(
    job: FigureJob, panel: PanelSpec, results: list[SweepResult]
) -> tuple[list[str], list[dict], dict]:
    rows_out = []
    for si in panel.sweeps:
        result = results[si]
        _, dicts = result.table()
        for row, d in zip(result.rows, dicts):
            if panel.delta is not None and row.delta != panel.delta:
                continue
            if panel.p is not None and row.p != panel.p:
                continue
            if panel.estimator_kinds and (
                _estimator_kind(row.estimator) not in panel.estimator_kinds
            ):
                continue
            rows_out.append({"sweep": si, **d})
    if not rows_out:
        raise ValueError(
            f"panel {panel.name!r} of figure {job.figure_id!r} matched no sweep rows"
        )
    metadata: dict = {"sweeps": {str(si): job.sweeps[si].to_dict() for si in panel.sweeps}}
    if job.comparison_deltas:
        metadata["comparison_deltas"] = list(job.comparison_deltas)
    return ["sweep", *ROW_COLUMNS], rows_out, metadata


def run_figure(
    job: FigureJob,
    directory,
    *,
    threads: Optional[int] = None,
    log: Optional[Callable[[str], None]] = None,
) -> list[Path]:
    """Run a figure job and write its panel CSVs plus manifest.json.

    Returns the written paths (panels first, manifest last).  Output depends
    only on the job and the thread count never changes the numbers, so a
    rerun with the same job reproduces every byte.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    say = log if log is not None else (lambda message: None)

    results: list[SweepResult] = []
    if job.comparison_deltas:
        say(
            f"{job.figure_id}: regularization comparison over "
            f"{len(job.comparison_deltas)} penalty values"
        )
        results.append(
            run_regularization_comparison(
                job.sweeps[0], job.comparison_deltas, threads=threads
            )
        )
    else:
        for i, spec in enumerate(job.sweeps):
            say(
                f"{job.figure_id}: sweep {i} "
                f"({len(spec.gamma_grid)} gamma points x {spec.replicates} replicates)"
            )
            results.append(run_sweep(spec, threads=threads))

    written: list[str] = []
    for panel in job.panels:
        if panel.kind == "projection":
            columns, rows, extra = _projection_rows(job.projection)
        elif panel.kind == "curves":
            columns, rows, extra = _curves_table(panel)
        else:
            columns, rows, extra = _sweep_panel_rows(job, panel, results)
        metadata = {"figure": job.figure_id, "panel": panel.to_dict(), **extra}
        file_name = f"{panel.name}.csv"
        write_table(directory / file_name, columns, rows, metadata=metadata)
        written.append(file_name)
        say(f"{job.figure_id}: wrote {file_name} ({len(rows)} rows)")

    runs = [
        {
            "sweep": i,
            "max_sandwich_violation": result.max_sandwich_violation,
            "notes": list(result.notes),
        }
        for i, result in enumerate(results)
    ]
    write_manifest(directory, written, extra={"figure": job.to_dict(), "runs": runs})
    return [directory / name for name in written] + [directory / MANIFEST_NAME]
