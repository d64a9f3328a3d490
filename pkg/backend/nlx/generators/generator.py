"""
Generators g(t, y, z)

Evaluators are vectorized over nodes: t is a float, y has shape (n,), z has
shape (n, d) and the result has shape (n,).
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .modulus import Modulus

GeneratorFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
# slope -> evaluator of the inf-convolution of g with slope * |.| in z
EnvelopeFn = Callable[[float], GeneratorFn]


def znorm(z: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        return np.abs(z)
    if z.shape[-1] == 1:
        return np.abs(z[..., 0])
    return np.sqrt(np.sum(z * z, axis=-1))


@dataclass(frozen=True, eq=False)
class Generator:
    """Driver g with its z-modulus, y-Lipschitz constant and structural flags."""

    fn: GeneratorFn
    modulus: Modulus
    lipschitz_y: float = 0.0
    depends_on_y: bool = False
    deterministic: bool = True
    zero_at_zero: bool = True
    name: str = "custom"
    envelope: Optional[EnvelopeFn] = None

    def __call__(self, t: float, y, z) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None] if z.shape[0] == y.shape[0] else z[None, :]
        return np.asarray(self.fn(t, y, z), dtype=float)

    def lipschitz_in_z(self, slope: float) -> "Generator":
        """
        Slope-Lipschitz envelope of g in z (self when no closed form is known).

        The envelope keeps g(t, y, 0) = 0 and the modulus, and equals g
        wherever g already has slope <= `slope`.
        """
        if self.envelope is None:
            return self
        return replace(self, fn=self.envelope(slope), envelope=None,
                       name=f"{self.name}|slope<={slope:.4g}")

    def negated(self) -> "Generator":
        """g^-(t, y, z) = -g(t, y, z), same modulus."""
        fn, envelope = self.fn, self.envelope
        return Generator(
            fn=lambda t, y, z: -fn(t, y, z),
            modulus=self.modulus,
            lipschitz_y=self.lipschitz_y,
            depends_on_y=self.depends_on_y,
            deterministic=self.deterministic,
            zero_at_zero=self.zero_at_zero,
            name=f"neg({self.name})",
            # -g uses the sup-convolution, i.e. minus the envelope of g
            envelope=None if envelope is None else (
                lambda slope: (lambda t, y, z, inner=envelope(slope): -inner(t, y, z))
            ),
        )

    def __repr__(self) -> str:
        return f"Generator({self.name}, phi={self.modulus.name}, K={self.lipschitz_y:g})"
