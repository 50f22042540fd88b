"""Render data-series CSVs into figures.

Every drawn value comes verbatim from a CSV column: median lines with
interquartile bands per series, dual-norm bound bands, closed-form overlay
lines/bands where the producer emitted them, and reference curves from
``*_ref`` columns. The view layer computes nothing; the only data
transformation is inserting a gap at the m/n = 1 pole so no line is drawn
across it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .csvdialect import DialectError, Table, read_table
from .layouts import AxesSpec, FigureSpec, layout_for
from . import styles


class FigureDataError(ValueError):
    """Input CSVs are missing, malformed, or not the requested figure's."""


# Column holding the fit's dual norm, by attack order p.
NORM_COLUMN_BY_P = {"1": "norm_linf", "2": "norm_l2", "inf": "norm_l1"}

POLE = 1.0


@dataclass(frozen=True)
class RenderReport:
    """What was drawn: enough to check the view without reopening the file."""

    out_path: str
    figure_id: str
    series_count: int
    legend_entries: tuple[tuple[str, ...], ...]
    axis_ranges: tuple[tuple[float, float, float, float], ...]


def insert_pole_gap(x: list[float], *ys: list[float]):
    """Break lines at the pole: insert an x=1, y=NaN vertex when x crosses 1."""
    order = sorted(range(len(x)), key=lambda i: x[i])
    xs = [x[i] for i in order]
    cols = [[col[i] for i in order] for col in ys]
    for i in range(len(xs) - 1):
        if xs[i] < POLE < xs[i + 1]:
            xs.insert(i + 1, POLE)
            for col in cols:
                col.insert(i + 1, math.nan)
            break
    return (xs, *cols)


def _finite(values: list[float]) -> bool:
    return any(math.isfinite(v) for v in values)


@dataclass
class _Series:
    label: str
    color: str
    linestyle: object
    x: list[float]
    median: list[float]
    q25: list[float]
    q75: list[float]
    bound_lower: list[float] | None = None
    bound_upper: list[float] | None = None
    asym: list[float] | None = None
    asym_lower: list[float] | None = None
    asym_upper: list[float] | None = None
    standard: list[float] | None = None
    standard_q25: list[float] | None = None
    standard_q75: list[float] | None = None


def _split_rows(table: Table) -> list[tuple[tuple[str, str, str, str], list[int]]]:
    """Group row indices by series identity, in first-appearance order."""
    idx = {name: k for k, name in enumerate(table.header)}
    for required in ("sweep", "gamma", "estimator", "p", "delta"):
        if required not in idx:
            raise FigureDataError(f"{table.path}: missing column {required!r}")
    groups: dict[tuple[str, str, str, str], list[int]] = {}
    for i, row in enumerate(table.rows):
        key = (row[idx["sweep"]], row[idx["estimator"]], row[idx["p"]], row[idx["delta"]])
        groups.setdefault(key, []).append(i)
    return list(groups.items())


def _series_label(key: tuple[str, str, str, str], panel: dict, n_deltas: int) -> str:
    sweep, estimator, p, delta = key
    group_by = panel.get("group_by", "")
    if group_by == "sweep":
        labels = panel.get("series_labels")
        if isinstance(labels, list):
            try:
                return str(labels[int(sweep)])
            except (ValueError, IndexError):
                pass
        return f"sweep {sweep}"
    if group_by == "estimator":
        return estimator
    if group_by == "p":
        if n_deltas > 1:
            return f"p={p}, delta={delta}"
        return f"p={p}"
    if "delta" in panel:
        return f"delta={panel['delta']}"
    if "p" in panel:
        return f"p={panel['p']}"
    return str(panel.get("name", estimator))


def _pick(column: list[float], rows: list[int]) -> list[float]:
    return [column[i] for i in rows]


def _sweep_series(table: Table, panel: dict) -> list[_Series]:
    y = str(panel.get("y", "adv_risk"))
    groups = _split_rows(table)
    n_deltas = len({key[3] for key, _ in groups})
    gamma = table.floats("gamma")
    out: list[_Series] = []
    for index, (key, rows) in enumerate(groups):
        sweep, estimator, p, delta = key
        if y == "norm":
            base = NORM_COLUMN_BY_P.get(p)
            if base is None:
                raise FigureDataError(
                    f"{table.path}: no committed dual-norm column for p={p}"
                )
        else:
            base = y
        for col in (f"{base}_median", f"{base}_q25", f"{base}_q75"):
            if not table.has_column(col):
                raise FigureDataError(f"{table.path}: missing column {col!r}")
        group_by = panel.get("group_by", "")
        label = _series_label(key, panel, n_deltas)
        color = styles.color_for(
            estimator=estimator,
            p=p if group_by == "p" else "",
            label=label if group_by == "sweep" else "",
            fallback_index=index,
        )
        try:
            delta_value: float | None = float(delta)
        except ValueError:
            delta_value = None
        series = _Series(
            label=label,
            color=color,
            linestyle=styles.linestyle_for(delta_value, index),
            x=_pick(gamma, rows),
            median=_pick(table.floats(f"{base}_median"), rows),
            q25=_pick(table.floats(f"{base}_q25"), rows),
            q75=_pick(table.floats(f"{base}_q75"), rows),
        )
        if y == "adv_risk":
            if table.has_column("bound_lower_median") and table.has_column("bound_upper_median"):
                series.bound_lower = _pick(table.floats("bound_lower_median"), rows)
                series.bound_upper = _pick(table.floats("bound_upper_median"), rows)
            if table.has_column("asym_risk"):
                series.asym = _pick(table.floats("asym_risk"), rows)
            if table.has_column("asym_lower") and table.has_column("asym_upper"):
                series.asym_lower = _pick(table.floats("asym_lower"), rows)
                series.asym_upper = _pick(table.floats("asym_upper"), rows)
        if table.has_column("standard_risk_median"):
            series.standard = _pick(table.floats("standard_risk_median"), rows)
            series.standard_q25 = _pick(table.floats("standard_risk_q25"), rows)
            series.standard_q75 = _pick(table.floats("standard_risk_q75"), rows)
        out.append(series)
    return out


def _draw_sweep_panel(ax, table: Table, spec: AxesSpec, drew_standard: bool) -> bool:
    panel = table.panel
    for series in _sweep_series(table, panel):
        arrays = [series.median, series.q25, series.q75]
        optional = [series.bound_lower, series.bound_upper, series.asym,
                    series.asym_lower, series.asym_upper, series.standard,
                    series.standard_q25, series.standard_q75]
        present = [a for a in optional if a is not None]
        gapped = insert_pole_gap(series.x, *arrays, *present)
        x, med, q25, q75 = gapped[0], gapped[1], gapped[2], gapped[3]
        rest = list(gapped[4:])
        lookup = {}
        for name, a in zip(
            ("bound_lower", "bound_upper", "asym", "asym_lower", "asym_upper",
             "standard", "standard_q25", "standard_q75"),
            optional,
        ):
            lookup[name] = rest.pop(0) if a is not None else None

        ax.plot(x, med, color=series.color, linestyle=series.linestyle,
                linewidth=1.6, label=series.label)
        ax.fill_between(x, q25, q75, color=series.color,
                        alpha=styles.IQR_ALPHA, linewidth=0)
        lo, hi = lookup["bound_lower"], lookup["bound_upper"]
        if lo is not None and hi is not None and _finite(lo) and _finite(hi):
            ax.fill_between(x, lo, hi, color=series.color,
                            alpha=styles.BOUND_ALPHA, linewidth=0)
        asym = lookup["asym"]
        if asym is not None and _finite(asym):
            ax.plot(x, asym, color=series.color, linestyle=styles.ASYM_LINESTYLE,
                    linewidth=1.0)
        alo, ahi = lookup["asym_lower"], lookup["asym_upper"]
        if alo is not None and ahi is not None and _finite(alo) and _finite(ahi):
            ax.fill_between(x, alo, ahi, color=series.color,
                            alpha=styles.ASYM_ALPHA, linewidth=0)

        if spec.include_standard and not drew_standard and lookup["standard"] is not None:
            ax.plot(x, lookup["standard"], color=styles.STANDARD_COLOR,
                    linestyle="-", linewidth=1.6, label="standard")
            if lookup["standard_q25"] is not None and lookup["standard_q75"] is not None:
                ax.fill_between(x, lookup["standard_q25"], lookup["standard_q75"],
                                color=styles.STANDARD_COLOR,
                                alpha=styles.IQR_ALPHA, linewidth=0)
            drew_standard = True
    return drew_standard


def _draw_curve_panel(ax, table: Table) -> None:
    if not (table.has_column("series") and table.has_column("gamma")
            and table.has_column("value")):
        raise FigureDataError(f"{table.path}: curve panel needs series,gamma,value")
    labels = table.column("series")
    gamma = table.floats("gamma")
    value = table.floats("value")
    order: list[str] = []
    for name in labels:
        if name not in order:
            order.append(name)
    for index, name in enumerate(order):
        rows = [i for i, s in enumerate(labels) if s == name]
        x, y = insert_pole_gap(_pick(gamma, rows), _pick(value, rows))
        color = styles.color_for(label=name, fallback_index=index)
        ax.plot(x, y, color=color, linewidth=1.6, label=name)


def _draw_projection_panel(ax, table: Table, prefix: str) -> None:
    for col in ("n", f"{prefix}_median", f"{prefix}_q25", f"{prefix}_q75"):
        if not table.has_column(col):
            raise FigureDataError(f"{table.path}: missing column {col!r}")
    x = table.floats("n")
    med = table.floats(f"{prefix}_median")
    ax.plot(x, med, color=styles.ESTIMATOR_COLORS["min_norm"], linewidth=1.6,
            label="projected direction")
    ax.fill_between(x, table.floats(f"{prefix}_q25"), table.floats(f"{prefix}_q75"),
                    color=styles.ESTIMATOR_COLORS["min_norm"],
                    alpha=styles.IQR_ALPHA, linewidth=0)
    ref_col = f"{prefix}_ref"
    if table.has_column(ref_col):
        ref = table.floats(ref_col)
        if _finite(ref):
            if prefix == "l2":
                label = "sqrt(n/m)"
            else:
                c_hat = table.metadata.get("c_hat")
                label = f"{c_hat:.3g}*sqrt(n)" if isinstance(c_hat, float) else "c*sqrt(n)"
            ax.plot(x, ref, color=styles.REFERENCE_COLOR, linestyle="--",
                    linewidth=1.4, label=label)


def _load_tables(figure_id: str, in_dir: Path) -> dict[str, Table]:
    base = in_dir / figure_id
    if not base.is_dir():
        base = in_dir
    paths = sorted(base.glob("*.csv"))
    if not paths:
        raise FigureDataError(f"no CSV files for {figure_id!r} under {in_dir}")
    tables: dict[str, Table] = {}
    for path in paths:
        table = read_table(path)
        owner = table.metadata.get("figure")
        if owner is not None and owner != figure_id:
            raise FigureDataError(
                f"{path}: belongs to figure {owner!r}, not {figure_id!r}"
            )
        tables[path.stem] = table
    return tables


def _resolve_output(out_path: str | Path, png: bool) -> Path:
    path = Path(out_path)
    if png:
        return path.with_suffix(".png")
    if path.suffix.lower() in (".svg", ".pdf", ".png"):
        return path
    return Path(str(path) + ".pdf")


_SAVE_METADATA = {
    "svg": {"Date": None},
    "pdf": {"CreationDate": None},
    "png": {},
}


def render(figure_id: str, in_dir: str | Path, out_path: str | Path,
           *, png: bool = False) -> RenderReport:
    """Draw one figure from its CSV directory and write an image file.

    Vector output (PDF, or SVG by extension) unless ``png`` is set. Returns
    a report of what was drawn; raises FigureDataError/DialectError on
    missing or malformed input. Identical CSVs yield identical output.
    """
    try:
        tables = _load_tables(figure_id, Path(in_dir))
    except DialectError as exc:
        raise FigureDataError(str(exc)) from None
    panels_meta = {name: t.panel for name, t in tables.items()}
    spec: FigureSpec = layout_for(figure_id, panels_meta)
    for name in spec.csv_names:
        if name not in tables:
            raise FigureDataError(
                f"{figure_id}: expected panel {name!r} not found under {in_dir}"
            )

    n_axes = len(spec.axes)
    ncols = 1 if n_axes == 1 else 2
    nrows = (n_axes + ncols - 1) // ncols
    with plt.rc_context({"svg.hashsalt": figure_id}):
        fig, axes_grid = plt.subplots(
            nrows, ncols, figsize=(5.4 * ncols, 4.0 * nrows), squeeze=False,
            constrained_layout=True,
        )
        flat = [ax for row in axes_grid for ax in row]
        for extra in flat[n_axes:]:
            extra.set_visible(False)

        legend_entries: list[tuple[str, ...]] = []
        axis_ranges: list[tuple[float, float, float, float]] = []
        try:
            for ax, ax_spec in zip(flat, spec.axes):
                drew_standard = False
                for name in ax_spec.panels:
                    table = tables[name]
                    kind = table.panel.get("kind", "")
                    if kind == "projection" or ax_spec.projection_prefix:
                        _draw_projection_panel(ax, table, ax_spec.projection_prefix or "l2")
                    elif kind == "curves":
                        _draw_curve_panel(ax, table)
                    elif kind == "sweep":
                        drew_standard = _draw_sweep_panel(ax, table, ax_spec, drew_standard)
                    else:
                        raise FigureDataError(
                            f"{table.path}: unknown panel kind {kind!r}"
                        )
                if ax_spec.log_x:
                    ax.set_xscale("log")
                if ax_spec.log_y:
                    ax.set_yscale("log")
                ax.set_xlabel(ax_spec.x_label)
                ax.set_ylabel(ax_spec.y_label)
                if n_axes > 1:
                    ax.set_title(ax_spec.projection_prefix or ax_spec.panels[0],
                                 fontsize=10)
                ax.grid(True, which="both", alpha=0.2)
                handles, labels = ax.get_legend_handles_labels()
                if labels:
                    ax.legend(fontsize=8)
                legend_entries.append(tuple(labels))
                axis_ranges.append(tuple(ax.get_xlim()) + tuple(ax.get_ylim()))

            fig.suptitle(figure_id, fontsize=11)
            target = _resolve_output(out_path, png)
            fmt = target.suffix[1:].lower()
            target.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(target, format=fmt, metadata=_SAVE_METADATA.get(fmt, {}))
        finally:
            plt.close(fig)

    return RenderReport(
        out_path=str(target),
        figure_id=figure_id,
        series_count=sum(len(entry) for entry in legend_entries),
        legend_entries=tuple(legend_entries),
        axis_ranges=tuple(axis_ranges),
    )
