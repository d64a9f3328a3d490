"""Recovery of the z-only generator of a dominated F-expectation and its checks."""

from .recovery import (
    INTERPOLATIONS,
    RecoveredGenerator,
    normalize_grid,
    recover_generator,
    short_horizon_value,
)
from .verify import null_integral_check, uniqueness_check, verify_representation

__all__ = [
    "INTERPOLATIONS",
    "RecoveredGenerator",
    "normalize_grid",
    "null_integral_check",
    "recover_generator",
    "short_horizon_value",
    "uniqueness_check",
    "verify_representation",
]
