"""Crossing limit cycles of piecewise-linear, 2π-periodic scalar ODEs."""
from .bounds import BoundReport, PfaffianProfile, bound_general, bound_two_regions, khovanskii_count
from .cycles import CrossingSequence, CyclicBidiagonal, LimitCycle, find_cycles, newton_refine, search_cycles
from .field import PiecewiseField, load_model, make_field, two_region
from .flow import constant_sign_cycles, displacement, flow_with_events
from .trigpoly import TrigPoly, isolate_zeros, zeros_in_period

__all__ = [
    "BoundReport", "PfaffianProfile", "bound_general", "bound_two_regions", "khovanskii_count",
    "CrossingSequence", "CyclicBidiagonal", "LimitCycle", "find_cycles", "newton_refine", "search_cycles",
    "PiecewiseField", "load_model", "make_field", "two_region",
    "constant_sign_cycles", "displacement", "flow_with_events",
    "TrigPoly", "isolate_zeros", "zeros_in_period",
]
