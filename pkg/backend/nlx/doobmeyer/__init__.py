"""Penalization Doob-Meyer decomposition of E-supermartingales."""

from .penalization import (
    DoobMeyerDecomposition,
    LevelSolution,
    PenalizationRun,
    accumulated_source,
    classical_linear_level_error,
    decompose,
    decomposition_residual,
    increasing_check,
    linear_process,
    penalize,
    supermartingale_preflight,
)

__all__ = [
    "DoobMeyerDecomposition",
    "LevelSolution",
    "PenalizationRun",
    "accumulated_source",
    "classical_linear_level_error",
    "decompose",
    "decomposition_residual",
    "increasing_check",
    "linear_process",
    "penalize",
    "supermartingale_preflight",
]
