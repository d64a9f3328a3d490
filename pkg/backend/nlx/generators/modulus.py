"""Continuity moduli phi: subadditive, increasing, phi(0) = 0, linear growth nu."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ContractError


@dataclass(frozen=True, eq=False)
class Modulus:
    """phi with its linear-growth constant nu."""

    phi: Callable[[np.ndarray], np.ndarray]
    nu: float
    name: str = "custom"

    def __call__(self, x):
        return self.phi(np.asarray(x, dtype=float))

    def __repr__(self) -> str:
        return f"Modulus({self.name}, nu={self.nu:g})"


def linear_modulus(c: float) -> Modulus:
    """phi(x) = c x"""
    c = float(c)
    return Modulus(lambda x: c * x, nu=c, name=f"linear({c:g})")


def sqrt_modulus() -> Modulus:
    """phi(x) = sqrt(x), nu = 1"""
    return Modulus(np.sqrt, nu=1.0, name="sqrt")


def zero_modulus() -> Modulus:
    return Modulus(np.zeros_like, nu=0.0, name="zero")


def capped_linear_modulus(c: float, cap: float) -> Modulus:
    """phi(x) = min(c x, cap); bounded but still subadditive."""
    c, cap = float(c), float(cap)
    return Modulus(lambda x: np.minimum(c * x, cap), nu=c, name=f"capped({c:g},{cap:g})")


MODULUS_REGISTRY = {
    "linear": linear_modulus,
    "sqrt": sqrt_modulus,
    "zero": zero_modulus,
    "capped_linear": capped_linear_modulus,
}


def modulus_from_name(name: str) -> Modulus:
    """Rebuild a catalogue modulus from its display name, e.g. "linear(0.1)"."""
    head, _, rest = name.partition("(")
    params = [float(p) for p in rest.rstrip(")").split(",") if p.strip()]
    key = "capped_linear" if head == "capped" else head
    if key not in MODULUS_REGISTRY:
        raise ContractError(f"unknown modulus {name!r}")
    return MODULUS_REGISTRY[key](*params)
