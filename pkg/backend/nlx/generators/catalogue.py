"""
Generator Catalogue

Named drivers usable from experiment configs by string key, e.g.
`name = "mu_abs_z"` with `mu = 0.1`.
"""

from typing import Any, Callable, Dict, Optional

import numpy as np

from ..errors import ContractError
from .generator import Generator, GeneratorFn, znorm
from .modulus import MODULUS_REGISTRY, Modulus, linear_modulus, sqrt_modulus, zero_modulus


def zero() -> Generator:
    """g = 0: the classical conditional expectation."""
    return Generator(lambda t, y, z: np.zeros_like(y), zero_modulus(), name="zero")


def _clipped_norm(phi: Callable[[np.ndarray], np.ndarray]):
    """slope -> min(slope |z|, phi(|z|)), the envelope of phi(|z|) for concave phi."""
    def envelope(slope: float) -> GeneratorFn:
        return lambda t, y, z: np.minimum(slope * znorm(z), phi(znorm(z)))
    return envelope


def mu_abs_z(mu: float) -> Generator:
    """g = mu |z|"""
    mu = float(mu)
    if mu < 0:
        raise ContractError(f"mu must be nonnegative, got {mu}")
    return Generator(lambda t, y, z: mu * znorm(z), linear_modulus(mu), name=f"mu_abs_z({mu:g})",
                     envelope=lambda slope: (lambda t, y, z: min(mu, slope) * znorm(z)))


def phi_norm(modulus: Modulus) -> Generator:
    """g = phi(|z|); the envelope assumes phi concave, as every catalogue modulus is."""
    phi = modulus.phi
    return Generator(lambda t, y, z: phi(znorm(z)), modulus, name=f"phi_norm({modulus.name})",
                     envelope=_clipped_norm(phi))


def neg_phi_norm(modulus: Modulus) -> Generator:
    """g = -phi(|z|)"""
    return phi_norm(modulus).negated()


def sqrt_norm() -> Generator:
    """g = sqrt(|z|), dominated by phi(x) = sqrt(x)"""
    return Generator(lambda t, y, z: np.sqrt(znorm(z)), sqrt_modulus(), name="sqrt_norm",
                     envelope=_clipped_norm(np.sqrt))


def affine_y(a: float, mu: float = 0.0) -> Generator:
    """g = a y + mu |z|; K = |a|, so g(t, y, 0) != 0 in general."""
    a, mu = float(a), float(mu)
    return Generator(
        lambda t, y, z: a * y + mu * znorm(z),
        linear_modulus(mu),
        lipschitz_y=abs(a),
        depends_on_y=a != 0.0,
        zero_at_zero=a == 0.0,
        name=f"affine_y({a:g},{mu:g})",
        envelope=lambda slope: (lambda t, y, z: a * y + min(mu, slope) * znorm(z)),
    )


def custom(
    fn: GeneratorFn,
    modulus: Modulus,
    lipschitz_y: float = 0.0,
    zero_at_zero: bool = True,
    name: str = "custom",
) -> Generator:
    """Wrap a user evaluator; validate it before use."""
    return Generator(
        fn,
        modulus,
        lipschitz_y=lipschitz_y,
        depends_on_y=lipschitz_y > 0,
        zero_at_zero=zero_at_zero,
        name=name,
    )


GENERATOR_REGISTRY: Dict[str, Callable[..., Generator]] = {
    "zero": zero,
    "mu_abs_z": mu_abs_z,
    "sqrt_norm": sqrt_norm,
    "affine_y": affine_y,
    "phi_norm": phi_norm,
    "neg_phi_norm": neg_phi_norm,
}


def make_modulus(name: str, **params: Any) -> Modulus:
    if name not in MODULUS_REGISTRY:
        raise ContractError(f"unknown modulus {name!r}; known: {sorted(MODULUS_REGISTRY)}")
    return MODULUS_REGISTRY[name](**params)


def make_generator(name: str, modulus: Optional[str] = None, **params: Any) -> Generator:
    """Build a catalogue generator from its key and parameters."""
    if name not in GENERATOR_REGISTRY:
        raise ContractError(f"unknown generator {name!r}; known: {sorted(GENERATOR_REGISTRY)}")
    if name in ("phi_norm", "neg_phi_norm"):
        if modulus is None:
            raise ContractError(f"generator {name!r} needs a modulus key")
        modulus_params = {k: v for k, v in params.items() if k in ("c", "cap")}
        return GENERATOR_REGISTRY[name](make_modulus(modulus, **modulus_params))
    return GENERATOR_REGISTRY[name](**params)
