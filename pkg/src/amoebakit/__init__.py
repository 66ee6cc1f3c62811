"""Amoebas and coamoebas of parametrized subvarieties of the complex torus."""
from __future__ import annotations

from .expr import parse, to_source
from .variety import Exclusion, Rect, VarietySpec

__all__ = ["Exclusion", "Rect", "VarietySpec", "parse", "to_source"]
__version__ = "0.1.0"
