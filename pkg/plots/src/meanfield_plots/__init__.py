"""Rendering scripts for the meanfield CLI's CSV outputs.

Each figure script consumes only CSV files (plus, implicitly, the manifest
that records how they were produced) and draws one two-panel figure; no
numbers are recomputed here.  Rendering is deterministic: identical CSVs
yield byte-identical SVG and PNG files.
"""

__version__ = "0.1.0"

from .common import FigureSpec, render

__all__ = ["FigureSpec", "render", "__version__"]
