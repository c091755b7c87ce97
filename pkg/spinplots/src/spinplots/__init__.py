"""Render spinnet CSV outputs into figures.

This package never computes physics: every curve and every histogram bar
is read verbatim from the CSVs the spinnet command-line tools persist.
"""

from .figures import (SchemaError, load_csv, render_collapse,
                      render_histogram_grid, render_moments_vs_lambda)

__all__ = ["SchemaError", "load_csv", "render_collapse",
           "render_histogram_grid", "render_moments_vs_lambda"]
