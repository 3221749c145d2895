"""Figures from the numerical package's delimited outputs.

This package draws; it does not compute.  Every number in a figure
comes out of a CSV or JSON file written by the revspec command line,
and the only arithmetic performed here is coordinate bookkeeping
(count * h^2 on the scaling plot, log axes).  Files are read, never
written to; the single output is one image per invocation.
"""

from .errors import HashMismatch, PlotError, SchemaError
from .figures import KINDS, FigureSpec, RenderResult, render

__all__ = ["FigureSpec", "HashMismatch", "KINDS", "PlotError",
           "RenderResult", "SchemaError", "render"]

__version__ = "0.1.0"
