"""
Drivers f(t, y) for BSDEs under an F-expectation.

Evaluators take the step index as well as the time so table and
penalization drivers can read per-step data: fn(k, t, y) with y of shape
(n_k,). Each driver can resolve its same-step implicit equation

    y = rhs + dt * f(t_k, y)

either in closed form or through the generic solvers below.
"""

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.optimize import brentq

from ..config import settings
from ..errors import ContractError, ConvergenceError
from ..lattice import AdaptedField

logger = structlog.get_logger(__name__)

DriverFn = Callable[[int, float, np.ndarray], np.ndarray]
ImplicitFn = Callable[[int, float, np.ndarray, float], np.ndarray]


def fixed_point_solve(
    mapping: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    step: Optional[int] = None,
) -> np.ndarray:
    """Iterate y <- mapping(y) until the sup change is <= tol."""
    tol = settings.ORACLE_TOL if tol is None else tol
    max_iter = settings.IMPLICIT_MAX_ITER if max_iter is None else max_iter
    y = np.asarray(start, dtype=float)
    change = np.inf
    for _ in range(max_iter):
        y_new = mapping(y)
        change = float(np.max(np.abs(y_new - y))) if y.size else 0.0
        y = y_new
        if change <= tol:
            return y
    raise ConvergenceError("fixed point did not converge", residual=change, step=step)


def bracket_solve(fn: DriverFn, k: int, t: float, rhs: np.ndarray, dt: float) -> np.ndarray:
    """Nodewise root of y - dt f(t, y) - rhs via brentq (needs a sign change)."""
    out = np.empty_like(rhs)
    for node, r in enumerate(rhs):
        def h(y, r=r):
            return y - dt * float(fn(k, t, np.array([y]))[0]) - r
        width = 1.0 + abs(r)
        lo, hi = r - width, r + width
        for _ in range(60):
            if h(lo) <= 0.0 <= h(hi):
                break
            width *= 2.0
            lo, hi = r - width, r + width
        else:
            raise ContractError(f"no bracket for the same-step equation at step {k}, node {node}")
        out[node] = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return out


@dataclass(frozen=True, eq=False)
class Driver:
    """f(t, y) with its Lipschitz constant lambda; `key` identifies f by kind and parameters."""

    fn: DriverFn
    lipschitz: float
    name: str = "custom"
    implicit: Optional[ImplicitFn] = None
    key: Optional[Tuple[Any, ...]] = None

    def __call__(self, k: int, t: float, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(k, t, np.asarray(y, dtype=float)), dtype=float)

    def same_as(self, other: "Driver") -> bool:
        """True if both evaluate the same f."""
        return self is other or (self.key is not None and self.key == other.key)

    def solve_implicit(self, k: int, t: float, rhs: np.ndarray, dt: float) -> np.ndarray:
        """Solve y = rhs + dt f(t_k, y) nodewise."""
        if self.implicit is not None:
            return self.implicit(k, t, rhs, dt)
        if self.lipschitz * dt < 1.0:
            return fixed_point_solve(lambda y: rhs + dt * self(k, t, y), rhs,
                                     tol=settings.ORACLE_TOL, step=k)
        return bracket_solve(self.fn, k, t, rhs, dt)


# ==================== CATALOGUE ====================

def zero() -> Driver:
    return Driver(lambda k, t, y: np.zeros_like(y), 0.0, "zero",
                  implicit=lambda k, t, rhs, dt: rhs, key=("zero",))


def constant(c: float) -> Driver:
    c = float(c)
    return Driver(lambda k, t, y: np.full_like(y, c), 0.0, f"constant({c:g})",
                  implicit=lambda k, t, rhs, dt: rhs + c * dt, key=("constant", c))


def linear(a: float) -> Driver:
    """f = a y"""
    a = float(a)

    def implicit(k, t, rhs, dt):
        if a * dt >= 1.0:
            raise ContractError(f"linear driver needs a*dt < 1, got a={a:g}, dt={dt:g}")
        return rhs / (1.0 - a * dt)

    return Driver(lambda k, t, y: a * y, abs(a), f"linear({a:g})", implicit=implicit,
                  key=("linear", a))


def penalization(n: float, Y: AdaptedField) -> Driver:
    """f = n (Y_t - y)"""
    n = float(n)
    if n <= 0:
        raise ContractError(f"penalization level must be positive, got {n}")
    if not Y.is_process:
        raise ContractError("penalization needs the obstacle at every step")
    return Driver(
        lambda k, t, y: n * (Y.at(k) - y),
        n,
        f"penalization({n:g})",
        implicit=lambda k, t, rhs, dt: (rhs + n * dt * Y.at(k)) / (1.0 + n * dt),
        # fields are immutable, so the obstacle is keyed by identity
        key=("penalization", n, id(Y)),
    )


def table(slopes: Sequence[float], intercepts: Sequence[float]) -> Driver:
    """Per-step affine driver f(t_k, y) = slopes[k] y + intercepts[k]."""
    a = np.asarray(slopes, dtype=float)
    b = np.asarray(intercepts, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("table driver needs equal-length slope and intercept lists")

    def implicit(k, t, rhs, dt):
        if a[k] * dt >= 1.0:
            raise ContractError(f"table driver needs slope*dt < 1 at step {k}")
        return (rhs + dt * b[k]) / (1.0 - dt * a[k])

    return Driver(lambda k, t, y: a[k] * y + b[k], float(np.max(np.abs(a))) if a.size else 0.0,
                  "table", implicit=implicit, key=("table", tuple(a.tolist()), tuple(b.tolist())))


def custom(fn: DriverFn, lipschitz: float, name: str = "custom") -> Driver:
    lipschitz = float(lipschitz)
    return Driver(fn, lipschitz, name, key=("custom", fn, lipschitz))


DRIVER_REGISTRY = {
    "zero": zero,
    "constant": constant,
    "linear": linear,
    "table": table,
}


def make_driver(name: str, **params) -> Driver:
    if name not in DRIVER_REGISTRY:
        raise ContractError(f"unknown driver {name!r}; known: {sorted(DRIVER_REGISTRY)}")
    return DRIVER_REGISTRY[name](**params)


def check_driver(driver: Driver, tree, samples: int = 64, seed: Optional[int] = None) -> bool:
    """Sampled |f(t,y1) - f(t,y2)| <= lambda |y1 - y2| on a few steps."""
    rng = np.random.default_rng(settings.VALIDATION_SEED if seed is None else seed)
    for k in sorted({0, tree.N // 2, tree.N - 1}):
        n = tree.node_count(k)
        for _ in range(max(1, samples // n)):
            y1 = rng.normal(0.0, 2.0, n)
            y2 = rng.normal(0.0, 2.0, n)
            lhs = np.abs(driver(k, tree.time(k), y1) - driver(k, tree.time(k), y2))
            if np.any(lhs > driver.lipschitz * np.abs(y1 - y2) + 1e-12 * (1 + np.abs(lhs))):
                logger.warning("✗ driver Lipschitz check failed", driver=driver.name, step=k)
                return False
    return True
