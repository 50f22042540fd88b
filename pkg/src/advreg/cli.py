"""Command-line entry point.

Subcommands: ``figure`` runs a built-in figure job and writes its panel CSVs
plus manifest; ``sweep`` runs a user-supplied sweep config; ``fit`` fits one
estimator on one sampled dataset (or a built-in one-point fixture) and prints
a risk report as JSON; ``asymptote`` evaluates closed-form risk/norm curves
on a gamma grid; ``lab`` runs the concentration experiments.  All tables use
the shared CSV dialect (comma-separated, ``.`` decimal, ``#``-prefixed JSON
metadata lines, UTF-8, LF), and a rerun with the same arguments reproduces
the output byte for byte.

Exit codes: 0 on success, 1 on usage/config errors, 2 on numeric or solver
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .adversarial import AdversarialBudget, build_risk_report
from .asymptotics import (
    equicorrelated_asymptotics,
    isotropic_asymptotics,
    latent_asymptotics,
)
from .concentration import (
    QuantileSeries,
    input_norm_scaling,
    loglog_slope,
    norm_rate_sweep,
    projection_experiment,
    spectrum_extremes,
)
from .csvio import render_table, write_table
from .datamodels import GroundTruth, model_from_dict, sample_dataset
from .estimators import SolverError
from .figurespecs import FIGURE_IDS, figure_job, run_figure
from .norms import as_norm_order, norm_order_label
from .sweeps import EstimatorSpec, SweepSpec, run_sweep

__all__ = ["main"]


class _UsageError(Exception):
    """Bad flags or malformed config: exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route them through the
    # shared handler so usage problems exit 1 and numeric failures keep 2.
    def error(self, message):
        raise _UsageError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
    except OSError as err:
        raise _UsageError(f"cannot read config {path!r}: {err}") from None
    except json.JSONDecodeError as err:
        raise _UsageError(f"config {path!r} is not valid JSON: {err}") from None
    if not isinstance(loaded, dict):
        raise _UsageError(f"config {path!r} must hold a JSON object")
    return loaded


def _emit_table(out: Optional[str], columns, rows, metadata) -> None:
    if out is None:
        sys.stdout.write(render_table(columns, rows, metadata=metadata))
    else:
        path = Path(out)
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        write_table(path, columns, rows, metadata=metadata)
        _log(f"wrote {path}")


def _series_rows(series: QuantileSeries) -> tuple[list[str], list[dict]]:
    columns = list(series.as_columns())
    arrays = series.as_columns()
    rows = [
        {name: float(arrays[name][i]) for name in columns}
        for i in range(series.x_values.size)
    ]
    return columns, rows


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise _UsageError(f"{flag} must name at least one value")
    return values


def _parse_grid(text: str, flag: str, *, geometric: bool) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"{flag} expects START:STOP:COUNT, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise _UsageError(f"{flag} expects START:STOP:COUNT numbers, got {text!r}") from None
    if count < 1:
        raise _UsageError(f"{flag} needs a positive COUNT")
    if geometric and (start <= 0 or stop <= 0):
        raise _UsageError(f"{flag} is a geometric grid and needs positive endpoints")
    grid = np.geomspace(start, stop, count) if geometric else np.linspace(start, stop, count)
    return [float(g) for g in grid]


def _parse_int_grid(text: str, flag: str, *, geometric: bool = False) -> list[int]:
    values = [int(round(v)) for v in _parse_grid(text, flag, geometric=geometric)]
    unique = sorted(set(values))
    if len(unique) != len(values):
        raise _UsageError(f"{flag} rounds to duplicate integers: {values}")
    return unique


# ---------------------------------------------------------------------------
# figure
# ---------------------------------------------------------------------------


def _cmd_figure(args) -> int:
    if args.list:
        for fid in FIGURE_IDS:
            print(f"{fid}\t{figure_job(fid).title}")
        return 0
    if args.figure_id is None:
        raise _UsageError("figure requires a figure id (or --list)")
    job = figure_job(
        args.figure_id,
        seed=args.seed,
        replicates=args.replicates,
        mc_samples=args.mc_samples,
    )
    directory = Path(args.out) / job.figure_id
    run_figure(job, directory, threads=args.threads, log=_log)
    print(str(directory))
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_dict(_load_json(args.config))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.mc_samples is not None:
        overrides["mc_samples"] = args.mc_samples
    if overrides:
        spec = replace(spec, **overrides)
    result = run_sweep(spec, threads=args.threads)
    for note in result.notes:
        _log(note)
    columns, rows = result.table()
    metadata = {
        "config": spec.to_dict(),
        "max_sandwich_violation": result.max_sandwich_violation,
        "notes": list(result.notes),
    }
    _emit_table(args.out, columns, rows, metadata)
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

_FIT_CONFIG_FIELDS = ("model", "n", "seed")


def _cmd_fit(args) -> int:
    p = as_norm_order(args.p)
    estimator = EstimatorSpec(args.estimator, delta=args.delta, p=p)
    if args.config is not None:
        cfg = _load_json(args.config)
        unknown = sorted(set(cfg) - set(_FIT_CONFIG_FIELDS))
        if unknown:
            raise _UsageError(f"fit config: unknown fields {unknown}")
        for required in ("model", "n"):
            if required not in cfg:
                raise _UsageError(f"fit config field {required!r}: missing")
        try:
            model = model_from_dict(cfg["model"])
        except (ValueError, TypeError, KeyError) as err:
            raise _UsageError(f"fit config field 'model': {err}") from None
        dataset = sample_dataset(model, int(cfg["n"]), int(cfg.get("seed", args.seed)))
        X, y, truth = dataset.X, dataset.y, dataset.truth
    else:
        # One-point fixture: a single observation of a single unit feature.
        X = np.array([[1.0]])
        y = np.array([1.0])
        truth = GroundTruth(beta=np.array([1.0]), cov=np.eye(1), sigma2=0.0)

    fitted = estimator.fit(X, y, restarts=args.restarts, seed=args.seed)

    if args.attack_delta is not None:
        attack_delta = args.attack_delta
    else:
        attack_delta = args.delta if args.estimator == "advtrain" else 0.0
    if args.attack_p is not None:
        attack_p = as_norm_order(args.attack_p)
    else:
        attack_p = p if args.estimator == "advtrain" else 2.0
    budget = AdversarialBudget(attack_delta, attack_p)
    report = build_risk_report(fitted.beta_hat, truth, [budget])

    payload = {
        "estimator": estimator.label(),
        "n": int(X.shape[0]),
        "m": int(X.shape[1]),
        "beta_hat": [float(b) for b in fitted.beta_hat],
        "standard_risk": report.standard_risk,
        "norms": {
            "l1": report.norm_l1,
            "l2": report.norm_l2,
            "linf": report.norm_linf,
        },
        "attacks": [
            {
                "p": norm_order_label(entry.p),
                "delta": entry.delta,
                "adv_risk": entry.adv_risk,
                "lower": entry.lower,
                "upper": entry.upper,
            }
            for entry in report.entries
        ],
        "diagnostics": {
            "objective": fitted.diagnostics.objective,
            "residual": fitted.diagnostics.residual,
            "iterations": fitted.diagnostics.iterations,
            "note": fitted.diagnostics.note,
        },
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# asymptote
# ---------------------------------------------------------------------------


def _cmd_asymptote(args) -> int:
    gammas: list[float] = []
    if args.gamma is not None:
        gammas.extend(_parse_floats(args.gamma, "--gamma"))
    if args.gamma_grid is not None:
        gammas.extend(_parse_grid(args.gamma_grid, "--gamma-grid", geometric=True))
    if not gammas:
        raise _UsageError("provide --gamma and/or --gamma-grid")
    include_floor = not args.no_noise_floor

    columns = ["gamma", "regime", "risk", "l2norm_sq"]
    if args.model == "latent":
        if args.psi is None:
            raise _UsageError("the latent model needs --psi (latent-to-ambient ratio d/m)")
        columns.append("c0")
    rows = []
    for gamma in gammas:
        if args.model == "isotropic":
            point = isotropic_asymptotics(
                gamma, args.r2, args.sigma2, include_noise_floor=include_floor
            )
            row = {
                "gamma": gamma,
                "regime": point.regime,
                "risk": point.risk,
                "l2norm_sq": point.l2norm_sq,
            }
        elif args.model == "equicorrelated":
            point = equicorrelated_asymptotics(
                gamma, args.rho, args.r2, args.sigma2, include_noise_floor=include_floor
            )
            row = {
                "gamma": gamma,
                "regime": point.regime,
                "risk": point.risk,
                "l2norm_sq": point.l2norm_sq,
            }
        else:
            risk, l2norm_sq, params = latent_asymptotics(
                args.psi, gamma, args.r2, args.sigma2, include_noise_floor=include_floor
            )
            row = {
                "gamma": gamma,
                "regime": "under" if gamma < 1.0 else "over",
                "risk": risk,
                "l2norm_sq": l2norm_sq,
                "c0": params.c0,
            }
        rows.append(row)

    metadata = {
        "model": args.model,
        "r2": args.r2,
        "sigma2": args.sigma2,
        "include_noise_floor": include_floor,
    }
    if args.model == "equicorrelated":
        metadata["rho"] = args.rho
    if args.model == "latent":
        metadata["psi"] = args.psi
    _emit_table(args.out, columns, rows, metadata)
    return 0


# ---------------------------------------------------------------------------
# lab
# ---------------------------------------------------------------------------


def _cmd_lab_projection(args) -> int:
    n_grid = _parse_int_grid(args.n_grid, "--n-grid")
    l2_series, ratio_series, c_hat = projection_experiment(
        args.m, n_grid, args.replicates, args.seed
    )
    series = l2_series if args.series == "l2" else ratio_series
    columns, rows = _series_rows(series)
    metadata = {
        "experiment": "projection",
        "series": args.series,
        "m": args.m,
        "n_grid": n_grid,
        "replicates": args.replicates,
        "seed": args.seed,
        "c_hat": c_hat,
    }
    _emit_table(args.out, columns, rows, metadata)
    return 0


def _cmd_lab_spectrum(args) -> int:
    report = spectrum_extremes(args.m, args.n, args.replicates, args.seed)
    columns = ["replicate", "min_eig", "max_eig"]
    rows = [
        {"replicate": r, "min_eig": float(report.min_eigs[r]), "max_eig": float(report.max_eigs[r])}
        for r in range(args.replicates)
    ]
    metadata = {
        "experiment": "spectrum",
        "m": report.m,
        "n": report.n,
        "replicates": report.replicates,
        "seed": report.seed,
        "C": report.C,
        "bound_lower": report.bound_lower,
        "bound_upper": report.bound_upper,
        "coverage": report.coverage,
    }
    _emit_table(args.out, columns, rows, metadata)
    return 0


def _cmd_lab_norm_rate(args) -> int:
    ratios = _parse_floats(args.ratios, "--ratios")
    m_grid = [int(round(ratio * args.n)) for ratio in ratios]
    if any(m <= args.n for m in m_grid):
        raise _UsageError("--ratios must all exceed 1 (the sweep is overparameterized)")
    l2_series, ratio_series = norm_rate_sweep(
        args.n, m_grid, args.r, args.sigma, args.replicates, args.seed
    )
    series = l2_series if args.series == "l2" else ratio_series
    columns, rows = _series_rows(series)
    metadata = {
        "experiment": "norm_rate",
        "series": args.series,
        "n": args.n,
        "m_grid": m_grid,
        "r": args.r,
        "sigma": args.sigma,
        "replicates": args.replicates,
        "seed": args.seed,
        "median_loglog_slope": loglog_slope(series.x_values, series.median),
    }
    _emit_table(args.out, columns, rows, metadata)
    return 0


def _cmd_lab_input_norm(args) -> int:
    m_grid = _parse_int_grid(args.m_grid, "--m-grid", geometric=True)
    sq_series, inf_series = input_norm_scaling(m_grid, args.replicates, args.seed)
    series = sq_series if args.series == "l2_sq" else inf_series
    columns, rows = _series_rows(series)
    metadata = {
        "experiment": "input_norm",
        "series": args.series,
        "m_grid": m_grid,
        "replicates": args.replicates,
        "seed": args.seed,
    }
    _emit_table(args.out, columns, rows, metadata)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="advreg",
        description="Adversarial risk experiments for overparameterized linear regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    fig = sub.add_parser("figure", help="run a built-in figure job and write its CSVs")
    fig.add_argument("figure_id", nargs="?", metavar="ID", help=f"one of: {', '.join(FIGURE_IDS)}")
    fig.add_argument("--list", action="store_true", help="list figure ids and titles, then exit")
    fig.add_argument("--out", default="figures", help="output root; data lands in OUT/ID/")
    fig.add_argument("--seed", type=int, default=None, help="override the figure's root seed")
    fig.add_argument("--replicates", type=int, default=None, help="override replicate counts")
    fig.add_argument("--mc-samples", type=int, default=None, help="Monte Carlo cross-check draws per cell")
    fig.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    fig.set_defaults(handler=_cmd_figure)

    swp = sub.add_parser("sweep", help="run a sweep described by a JSON config")
    swp.add_argument("--config", required=True, help="JSON file mirroring the sweep config schema")
    swp.add_argument("--out", default=None, help="CSV path (default: stdout)")
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--replicates", type=int, default=None)
    swp.add_argument("--mc-samples", type=int, default=None)
    swp.add_argument("--threads", type=int, default=None)
    swp.set_defaults(handler=_cmd_sweep)

    fit = sub.add_parser("fit", help="fit one estimator on one dataset; print a JSON risk report")
    fit.add_argument("--estimator", default="min_norm", choices=["min_norm", "ridge", "lasso", "advtrain"])
    fit.add_argument("--delta", type=float, default=0.0, help="training penalty / attack-radius parameter")
    fit.add_argument("--p", default="2", help="attack-norm order for advtrain (e.g. 1, 2, inf)")
    fit.add_argument("--config", default=None, help="JSON {model, n, seed}; omit for the 1-point fixture")
    fit.add_argument("--attack-delta", type=float, default=None, help="report budget radius (default: training delta for advtrain, else 0)")
    fit.add_argument("--attack-p", default=None, help="report budget norm order (default: training p for advtrain, else 2)")
    fit.add_argument("--restarts", type=int, default=2)
    fit.add_argument("--seed", type=int, default=0)
    fit.set_defaults(handler=_cmd_fit)

    asym = sub.add_parser("asymptote", help="evaluate closed-form risk/norm curves on a gamma grid")
    asym.add_argument("--model", required=True, choices=["isotropic", "equicorrelated", "latent"])
    asym.add_argument("--r2", type=float, required=True, help="signal strength ||beta||_Sigma^2")
    asym.add_argument("--sigma2", type=float, required=True, help="label noise variance")
    asym.add_argument("--rho", type=float, default=0.0, help="feature correlation (equicorrelated)")
    asym.add_argument("--psi", type=float, default=None, help="latent-to-ambient ratio d/m (latent)")
    asym.add_argument("--gamma", default=None, help="comma-separated overparameterization ratios")
    asym.add_argument("--gamma-grid", default=None, metavar="START:STOP:COUNT", help="geometric gamma grid")
    asym.add_argument("--no-noise-floor", action="store_true", help="report excess risk, without the sigma2 floor")
    asym.add_argument("--out", default=None, help="CSV path (default: stdout)")
    asym.set_defaults(handler=_cmd_asymptote)

    lab = sub.add_parser("lab", help="concentration experiments")
    labsub = lab.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")

    proj = labsub.add_parser("projection", help="norms of a fixed direction under random row-space projections")
    proj.add_argument("--m", type=int, default=2000, help="ambient dimension")
    proj.add_argument("--n-grid", default="100:1000:10", metavar="START:STOP:COUNT", help="linear grid of subspace ranks")
    proj.add_argument("--replicates", type=int, default=100)
    proj.add_argument("--seed", type=int, default=0)
    proj.add_argument("--series", default="l2", choices=["l2", "l1_ratio"], help="l2 norm, or l1 norm divided by sqrt(n)")
    proj.add_argument("--out", default=None)
    proj.set_defaults(handler=_cmd_lab_projection)

    spec = labsub.add_parser("spectrum", help="extreme eigenvalues of the pseudo-inverse sample covariance")
    spec.add_argument("--m", type=int, required=True)
    spec.add_argument("--n", type=int, required=True)
    spec.add_argument("--replicates", type=int, default=50)
    spec.add_argument("--seed", type=int, default=0)
    spec.add_argument("--out", default=None)
    spec.set_defaults(handler=_cmd_lab_spectrum)

    rate = labsub.add_parser("norm-rate", help="norm decay of minimum-norm fits as overparameterization grows")
    rate.add_argument("--n", type=int, default=100)
    rate.add_argument("--ratios", default="2,4,8,16,32,64", help="comma-separated m/n ratios (> 1)")
    rate.add_argument("--r", type=float, default=1.0, help="signal norm ||beta||_2")
    rate.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation")
    rate.add_argument("--replicates", type=int, default=20)
    rate.add_argument("--seed", type=int, default=0)
    rate.add_argument("--series", default="l2", choices=["l2", "l1_over_l2"], help="l2 norm, or the l1/l2 norm ratio")
    rate.add_argument("--out", default=None)
    rate.set_defaults(handler=_cmd_lab_norm_rate)

    inorm = labsub.add_parser("input-norm", help="norm growth of isotropic Gaussian inputs")
    inorm.add_argument("--m-grid", default="10:10000:7", metavar="START:STOP:COUNT", help="geometric grid of dimensions")
    inorm.add_argument("--replicates", type=int, default=200)
    inorm.add_argument("--seed", type=int, default=0)
    inorm.add_argument("--series", default="l2_sq", choices=["l2_sq", "linf"])
    inorm.add_argument("--out", default=None)
    inorm.set_defaults(handler=_cmd_lab_input_norm)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
