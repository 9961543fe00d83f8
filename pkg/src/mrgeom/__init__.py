"""Finite energy coordinates: harmonic coordinates and the Kusuoka metric on the
Sierpinski gasket, coordinate calculus over finite partitions, Euclidean and
Heisenberg reference models, and coordinate sequences built on finite graphs."""

from .poly import Polynomial, parse_polynomial
from .graph_form import GraphForm, VertexMeasure
from .models import CoefficientField, CoordinateModel

__all__ = ["Polynomial", "parse_polynomial", "GraphForm", "VertexMeasure", "CoefficientField", "CoordinateModel"]
__version__ = "0.1.0"
