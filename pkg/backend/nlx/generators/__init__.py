"""Moduli, generators g(t, y, z), the named catalogue and sampled validation."""

from .catalogue import (
    GENERATOR_REGISTRY,
    affine_y,
    custom,
    make_generator,
    make_modulus,
    mu_abs_z,
    neg_phi_norm,
    phi_norm,
    sqrt_norm,
    zero,
)
from .generator import Generator, znorm
from .modulus import (
    Modulus,
    capped_linear_modulus,
    linear_modulus,
    modulus_from_name,
    sqrt_modulus,
    zero_modulus,
)
from .validation import validate_generator, validate_modulus

__all__ = [
    "GENERATOR_REGISTRY",
    "Generator",
    "Modulus",
    "affine_y",
    "capped_linear_modulus",
    "custom",
    "linear_modulus",
    "make_generator",
    "make_modulus",
    "modulus_from_name",
    "mu_abs_z",
    "neg_phi_norm",
    "phi_norm",
    "sqrt_modulus",
    "sqrt_norm",
    "validate_generator",
    "validate_modulus",
    "zero",
    "zero_modulus",
    "znorm",
]
