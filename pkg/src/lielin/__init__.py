"""Linearizing point transformations of ODEs from their symmetry algebras."""

__version__ = "0.1.0"

from .linearizer import CaseTag, classify, linearize
from .planefield import OdeSpec, PointTransformation, VectorField
from .symexpr import ParameterTable, is_zero, parse

__all__ = [
    "CaseTag",
    "OdeSpec",
    "ParameterTable",
    "PointTransformation",
    "VectorField",
    "classify",
    "is_zero",
    "linearize",
    "parse",
]
