"""Exact simulation of a two-parameter family of rectangle exchange maps.

The package follows the maps through their corner-percolation Truchet
tilings, a symbolic skew product and the renormalization that relates the
map at ``(α, β)`` to the map at ``(f(α), f(β))``.  It also computes the
measure of periodic points via the return-time cocycle.
"""

from .numerics import GReduction, Scalar, floor_quotient, format_scalar, parse_scalar, reduce_mod_G
from .params import Branch, Itinerary, ParamPair, f_step, itinerary_of, param_from_itinerary
from .pet import LiftState, psi_lift_step, verify_renormalization
from .sequences import SeqWindow
from .tiling import Tiling
from .symbolic import SymbolicState
from .cocycle import accumulate, ns_limit

__version__ = "0.1.0"

__all__ = [
    "Scalar",
    "GReduction",
    "parse_scalar",
    "format_scalar",
    "reduce_mod_G",
    "floor_quotient",
    "Branch",
    "Itinerary",
    "ParamPair",
    "f_step",
    "itinerary_of",
    "param_from_itinerary",
    "LiftState",
    "psi_lift_step",
    "verify_renormalization",
    "SeqWindow",
    "Tiling",
    "SymbolicState",
    "accumulate",
    "ns_limit",
    "__version__",
]
