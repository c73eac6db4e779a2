"""Rational points near planar curves: exact counting, lattice machinery and explicit bounds."""

__version__ = "0.1.0"

from .counting import (
    CountParams,
    RationalTriple,
    brute_force_oracle,
    count_N,
    delta_union,
    enumerate_R,
)
from .curves import Curve, Interval, Polynomial
from .errors import GuardError, ValidationError
from .expr import curve_from_expression, parse_expression

__all__ = [
    "CountParams",
    "Curve",
    "GuardError",
    "Interval",
    "Polynomial",
    "RationalTriple",
    "ValidationError",
    "__version__",
    "brute_force_oracle",
    "count_N",
    "curve_from_expression",
    "delta_union",
    "enumerate_R",
    "parse_expression",
]
