"""Discrete BSDE solver defining E^g, representation extraction and comparison checks."""

from .checks import SchemeGapStudy, comparison_check, scheme_gap, symmetry_check
from .representation import Representation, extract_representation, representation_gap_check
from .solver import BsdeSolution, Scheme, explicit_step, g_expectation, implicit_step, solve_bsde

__all__ = [
    "BsdeSolution",
    "Representation",
    "Scheme",
    "SchemeGapStudy",
    "comparison_check",
    "explicit_step",
    "extract_representation",
    "g_expectation",
    "implicit_step",
    "representation_gap_check",
    "scheme_gap",
    "solve_bsde",
    "symmetry_check",
]
