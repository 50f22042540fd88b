"""Committed style table: fixed colors and line styles per series identity.

The mapping is deliberately static so the same estimator / attack budget /
feature scaling looks the same in every figure. Styling is resolved from the
series' identity columns only; nothing here computes statistics.
"""

from __future__ import annotations

# Color per estimator family (the part before any "(delta=...)" suffix).
ESTIMATOR_COLORS = {
    "min_norm": "#1f77b4",
    "ridge": "#ff7f0e",
    "lasso": "#2ca02c",
    "advtrain_l2": "#d62728",
    "advtrain_linf": "#9467bd",
}

# Color per attack geometry, used when series within an axes differ by p.
P_COLORS = {
    "1": "#2ca02c",
    "1.5": "#17becf",
    "2": "#1f77b4",
    "inf": "#d62728",
}

# Color per feature-scaling series label, used when series differ by sweep.
LABEL_COLORS = {
    "eta=1": "#1f77b4",
    "eta=sqrt_log": "#2ca02c",
    "eta=sqrt_m": "#d62728",
}

# Fallback cycle for identities outside the committed tables.
FALLBACK_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

# Line style per attack/training budget delta (exact match on the float).
DELTA_LINESTYLES = {
    0.0: "-",
    0.001: ":",
    0.01: "-.",
    0.05: (0, (5, 2)),
    0.1: "--",
    0.5: (0, (4, 1, 1, 1)),
    1.0: (0, (3, 1, 1, 1)),
    2.0: (0, (1, 1)),
}
FALLBACK_LINESTYLES = ("-", "--", "-.", ":")

STANDARD_COLOR = "#444444"   # the attack-free risk reference line
REFERENCE_COLOR = "#777777"  # fixed reference curves (e.g. projection laws)

IQR_ALPHA = 0.25    # interquartile band around each median line
BOUND_ALPHA = 0.10  # dual-norm sandwich band
ASYM_ALPHA = 0.12   # band implied by the closed-form limit
ASYM_LINESTYLE = (0, (6, 2))


def estimator_family(estimator: str) -> str:
    return estimator.split("(", 1)[0]


def color_for(*, estimator: str = "", p: str = "", label: str = "",
              fallback_index: int = 0) -> str:
    """Resolve the committed color, most specific identity first."""
    if label and label in LABEL_COLORS:
        return LABEL_COLORS[label]
    if p and p in P_COLORS:
        return P_COLORS[p]
    family = estimator_family(estimator)
    if family in ESTIMATOR_COLORS:
        return ESTIMATOR_COLORS[family]
    return FALLBACK_COLORS[fallback_index % len(FALLBACK_COLORS)]


def linestyle_for(delta: float | None, fallback_index: int = 0):
    if delta is not None and delta in DELTA_LINESTYLES:
        return DELTA_LINESTYLES[delta]
    return FALLBACK_LINESTYLES[fallback_index % len(FALLBACK_LINESTYLES)]
