"""BSDEs under an F-expectation: drivers, Picard solver with patching, oracle."""

from .drivers import (
    DRIVER_REGISTRY,
    Driver,
    bracket_solve,
    check_driver,
    constant,
    custom,
    fixed_point_solve,
    linear,
    make_driver,
    penalization,
    table,
    zero,
)
from .solver import (
    EfsdeProblem,
    PicardResult,
    backward_oracle,
    compare_solutions,
    defining_residual,
    iteration_cap,
    martingale_part,
    picard_solve,
    translation_preflight,
    window_bounds,
)

__all__ = [
    "DRIVER_REGISTRY",
    "Driver",
    "EfsdeProblem",
    "PicardResult",
    "backward_oracle",
    "bracket_solve",
    "check_driver",
    "compare_solutions",
    "constant",
    "custom",
    "defining_residual",
    "fixed_point_solve",
    "iteration_cap",
    "linear",
    "make_driver",
    "martingale_part",
    "penalization",
    "picard_solve",
    "table",
    "translation_preflight",
    "window_bounds",
    "zero",
]
