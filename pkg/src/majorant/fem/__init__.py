"""Lowest-order mixed finite elements on triangulations."""
from . import em2d, manufactured, rd
from .mixed import Coefficients, MixedFEM, QuadratureDegreeWarning

__all__ = ["Coefficients", "MixedFEM", "QuadratureDegreeWarning", "em2d", "manufactured", "rd"]
