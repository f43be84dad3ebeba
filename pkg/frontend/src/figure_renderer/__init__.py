"""Render experiment CSV artifacts as line charts and trade-off fronts.

Strictly a view layer: the package validates its input against the fixed
CSV contract, draws it under a committed style, and computes nothing.
"""

from .figures import FigureSpec, build_front_figure, build_sweep_figure, render
from .schema import EXPECTED_HEADER, SchemaError, SeriesRow, read_rows

__all__ = [
    "EXPECTED_HEADER",
    "FigureSpec",
    "SchemaError",
    "SeriesRow",
    "build_front_figure",
    "build_sweep_figure",
    "read_rows",
    "render",
]

__version__ = "0.1.0"
