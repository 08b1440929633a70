"""Sweep-CSV plotting: per-method metric curves with seed-averaged bands."""

from .core import (EXPECTED_HEADER, ColumnError, PlotSpec, extract_series,
                   read_rows, render, render_panels, series_digest)

__version__ = "0.1.0"
