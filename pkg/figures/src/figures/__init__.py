"""Render advreg's CSV data series into publication-style plots.

This package consumes only the producing CLI's external contract — the CSV
dialect with ``#``-prefixed JSON metadata — and draws what the columns say:
median lines, interquartile bands, bound bands, closed-form overlays, and
reference curves. It never imports the producing library and never
recomputes a statistic.
"""

from .csvdialect import DialectError, Table, read_table
from .layouts import LAYOUTS, AxesSpec, FigureSpec, layout_for
from .rendering import FigureDataError, RenderReport, insert_pole_gap, render

__all__ = [
    "AxesSpec",
    "DialectError",
    "FigureDataError",
    "FigureSpec",
    "LAYOUTS",
    "RenderReport",
    "Table",
    "insert_pole_gap",
    "layout_for",
    "read_table",
    "render",
]
