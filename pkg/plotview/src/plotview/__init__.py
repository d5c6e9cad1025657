"""Offline figure generation for simcav CSV outputs."""

__version__ = "0.1.0"

from .csvio import CsvError, read_table
from .render import KINDS, PlotSpec, RenderResult, render

__all__ = ["__version__", "CsvError", "read_table", "KINDS", "PlotSpec", "RenderResult", "render"]
