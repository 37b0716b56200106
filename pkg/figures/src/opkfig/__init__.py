"""Figure rendering for the opkin simulation artifacts.

This package contains no model logic: it reads the versioned CSV tables and
``summary.json`` files the simulator writes, and turns them into figures.
Analytic overlay curves (closed-form variance curve, thresholds, the
crossover density) are taken verbatim from ``summary.json`` so there is a
single source of numerical truth.
"""
from .tables import Table, TableError, read_table
from .figures import FIGURE_KINDS, FigureJob, render

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "FigureJob",
    "Table",
    "TableError",
    "read_table",
    "render",
    "__version__",
]
