"""Adversarial risk of (over)parameterized linear regression.

Library + CLI for computing worst-case lp-attack risks of linear predictors
in closed form, fitting interpolating and regularized estimators, evaluating
high-dimensional asymptotic risk curves, and reproducing the associated
double-descent experiments as CSV data series.
"""

from .adversarial import (
    AdversarialBudget,
    AttackResult,
    BoundPair,
    MonteCarloEstimate,
    RiskReport,
    RiskReportEntry,
    adv_risk_gaussian,
    adv_risk_monte_carlo,
    build_risk_report,
    lp_transfer_bounds,
    pointwise_adv_loss,
    risk_bounds,
    worst_case_attack,
)
from .estimators import (
    BiasVarianceTerms,
    Diagnostics,
    FittedModel,
    ProjectorDecomposition,
    SolverError,
    adv_train_fit,
    adv_train_objective,
    bias_variance_terms,
    lasso_fit,
    lasso_objective,
    min_norm_fit,
    projector_decomposition,
    ridge_fit,
)
from .datamodels import (
    Dataset,
    DataModel,
    EquicorrelatedModel,
    GroundTruth,
    IsotropicModel,
    LatentModel,
    Scaling,
    WeakFeaturesModel,
    equicorrelated_sigma,
    latent_effective_params,
    latent_to_linear,
    make_orthogonal_W,
    model_from_dict,
    model_to_dict,
    realize_truth,
    sample_dataset,
    weak_features_reference,
)
from .norms import (
    INF,
    DegenerateDirectionError,
    NormSandwich,
    as_norm_order,
    dual_order,
    holder_extremal_direction,
    norm_sandwich,
    vector_norm,
)
from .asymptotics import (
    AsymptoticPoint,
    LatentAsymptoticParams,
    equicorrelated_asymptotics,
    isotropic_asymptotics,
    latent_asymptotics,
    scaled_norm_curve,
    solve_c0,
)
from .concentration import (
    QuantileSeries,
    SpectrumReport,
    estimate_l1_projection_constant,
    input_norm_scaling,
    loglog_slope,
    norm_rate_sweep,
    projection_experiment,
    projection_norm_series,
    random_projector_apply,
    spectrum_extremes,
)
from .sweeps import (
    EstimatorSpec,
    ReplicateRecord,
    SweepResult,
    SweepRow,
    SweepSpec,
    WeakFeaturesTable,
    run_regularization_comparison,
    run_sweep,
    run_weak_features,
)
from .csvio import (
    ParsedTable,
    file_sha256,
    read_table,
    render_table,
    write_manifest,
    write_table,
)
from .figurespecs import (
    FIGURE_IDS,
    CurveSeries,
    FigureJob,
    PanelSpec,
    ProjectionSpec,
    figure_job,
    run_figure,
)

__version__ = "0.1.0"
