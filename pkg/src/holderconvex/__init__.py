"""Rigorous evaluation of a C^(1+alpha) function with no large convex restriction.

The construction stacks three layers: a self-similar Cantor set F0 with its
CDF phi0, an oscillating tower of plateau functions converging to g1, and a
self-similar limit g.  The function of interest is f(x) = int_0^x g.
"""

# ruff: noqa: F401
from .cantor_base import ConstructionParams, Strictness, children_at_depth, gaps_level0, phi0_eval
from .errors import *  # noqa: F403
from .integral import f_eval, segment_integral
from .records import EvalResult, IntervalRec, Kind, MeasuredConstants
from .scalar import Mode, Ordering, Scalar, compare, format_scalar, parse_scalar, pow_rational
from .tower import g1_eval, g_eval, phi_n_eval

__version__ = "0.1.0"
