"""Committed per-figure layouts: which CSV panels land on which axes.

A layout is pure view configuration — panel-to-axes assignment, axis labels,
and log flags. Everything plotted still comes verbatim from CSV columns.
Figure ids without a committed layout get one axes per CSV panel, labeled
from the panel metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class AxesSpec:
    """One axes: the CSV panels drawn on it and its presentation flags."""

    panels: tuple[str, ...]
    y_label: str
    x_label: str = "m/n"
    log_x: bool = True
    log_y: bool = True
    # Draw the shared attack-free risk column as an extra labeled line.
    include_standard: bool = False
    # For projection panels: which column prefix ("l2"/"l1") this axes shows.
    projection_prefix: str = ""


@dataclass(frozen=True)
class FigureSpec:
    """A figure: its id and the axes it is built from."""

    figure_id: str
    axes: tuple[AxesSpec, ...]
    csv_names: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        seen: list[str] = []
        for ax in self.axes:
            for name in ax.panels:
                if name not in seen:
                    seen.append(name)
        object.__setattr__(self, "csv_names", tuple(seen))


LAYOUTS: dict[str, FigureSpec] = {
    "fig1": FigureSpec("fig1", (
        AxesSpec(("risk",), "risk", include_standard=True),
    )),
    "fig2": FigureSpec("fig2", (
        AxesSpec(("delta0", "delta1", "delta2"), "adversarial risk"),
    )),
    "fig3": FigureSpec("fig3", (
        AxesSpec(("risk",), "adversarial risk"),
        AxesSpec(("norm",), "dual norm of fit"),
    )),
    "fig4": FigureSpec("fig4", (
        AxesSpec(("projection",), "l2 norm of projection", x_label="n",
                 projection_prefix="l2"),
        AxesSpec(("projection",), "l1 norm of projection", x_label="n",
                 projection_prefix="l1"),
    )),
    "fig5": FigureSpec("fig5", (
        AxesSpec(("risk",), "adversarial risk"),
    )),
    "fig6": FigureSpec("fig6", (
        AxesSpec(("l2",), "adversarial risk, l2 attack"),
        AxesSpec(("linf",), "adversarial risk, linf attack"),
    )),
    "fig7": FigureSpec("fig7", (
        AxesSpec(("ridge",), "l1 norm of fit"),
        AxesSpec(("lasso",), "l1 norm of fit"),
        AxesSpec(("advtrain_l2",), "l1 norm of fit"),
        AxesSpec(("advtrain_linf",), "l1 norm of fit"),
    )),
    "fig8": FigureSpec("fig8", (
        AxesSpec(("risk",), "adversarial risk"),
    )),
}


def generic_layout(figure_id: str, panels: dict[str, dict]) -> FigureSpec:
    """One axes per panel, labels derived from the panel metadata."""
    axes = []
    for name in sorted(panels):
        meta = panels[name]
        kind = meta.get("kind", "")
        if kind == "projection":
            axes.append(AxesSpec((name,), "l2 norm of projection", x_label="n",
                                 projection_prefix="l2"))
            axes.append(AxesSpec((name,), "l1 norm of projection", x_label="n",
                                 projection_prefix="l1"))
            continue
        y = str(meta.get("y", "value"))
        y_label = {
            "adv_risk": "adversarial risk",
            "standard_risk": "risk",
            "norm": "dual norm of fit",
            "norm_l1": "l1 norm of fit",
            "norm_l2": "l2 norm of fit",
            "norm_linf": "linf norm of fit",
        }.get(y, y)
        axes.append(AxesSpec((name,), y_label))
    return FigureSpec(figure_id, tuple(axes))


def layout_for(figure_id: str, panels: dict[str, dict]) -> FigureSpec:
    spec = LAYOUTS.get(figure_id)
    if spec is None:
        return generic_layout(figure_id, panels)
    return spec
