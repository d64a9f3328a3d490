"""
F-expectation operators

Every operator answers two queries:

    process(xi)      -> E[xi | F_k] for all k (one backward sweep, cached)
    step(values, k)  -> one-step value of a step-(k+1) array at step k

Recursive operators (generator-driven, drift uncertainty, classical)
implement `one_step` and derive the sweep; black-box operators wrap an
evaluator and derive `step` by lifting to the leaves.
"""

import threading
from abc import ABC, abstractmethod
from collections import OrderedDict
from enum import Enum
from typing import Any, Callable, Optional

import numpy as np
import structlog

from ..bsde.solver import explicit_step
from ..config import settings
from ..errors import ContractError, NumericError
from ..generators import (
    Generator,
    Modulus,
    linear_modulus,
    neg_phi_norm,
    phi_norm,
    validate_generator,
    zero_modulus,
    znorm,
)
from ..lattice import AdaptedField, FiltrationTree

logger = structlog.get_logger(__name__)


class Provenance(str, Enum):
    FROM_GENERATOR = "from_generator"
    DRIFT_UNCERTAINTY = "drift_uncertainty"
    CLASSICAL = "classical"
    USER_DEFINED = "user_defined"


class FExpectationOperator(ABC):
    """Conditional operator family E[. | F_t] on one tree."""

    def __init__(self, tree: FiltrationTree, modulus: Modulus, provenance: Provenance, name: str):
        self.tree = tree
        self.modulus = modulus
        self.provenance = provenance
        self.name = name
        self._cache: "OrderedDict[int, tuple]" = OrderedDict()
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, phi={self.modulus.name})"

    # ==================== QUERIES ====================

    def process(self, xi: AdaptedField, use_cache: bool = True) -> AdaptedField:
        """E[xi | F_k] for k = 0..N; step N is xi itself."""
        if xi.tree is not self.tree:
            raise ContractError(f"claim {xi.label!r} lives on a different tree")
        key = id(xi)
        if use_cache:
            with self._lock:
                hit = self._cache.get(key)
                if hit is not None and hit[0] is xi:
                    self._cache.move_to_end(key)
                    return hit[1]

        steps = self._sweep(xi.terminal)
        steps[self.tree.N] = xi.terminal
        result = AdaptedField.process(self.tree, steps, f"{self.name}[{xi.label}]")

        if use_cache:
            with self._lock:
                self._cache[key] = (xi, result)
                while len(self._cache) > settings.SWEEP_CACHE_SIZE:
                    self._cache.popitem(last=False)
        return result

    def conditional(self, xi: AdaptedField, t: int) -> AdaptedField:
        """E[xi | F_t] as a step-t slice."""
        if not 0 <= t <= self.tree.N:
            raise ContractError(f"step {t} outside 0..{self.tree.N}")
        return AdaptedField.slice(self.tree, t, self.process(xi).at(t))

    def value(self, xi: AdaptedField) -> float:
        return float(self.process(xi).at(0)[0])

    def step(self, values: np.ndarray, k: int) -> np.ndarray:
        """E[f | F_k] for f given at step k+1."""
        claim = AdaptedField.claim(self.tree, self.tree.lift(values, k + 1))
        return self.process(claim, use_cache=False).at(k)

    def backward(self, values: np.ndarray, m: int) -> list:
        """[E[f | F_k] for k = 0..m] for f given at step m."""
        claim = AdaptedField.claim(self.tree, self.tree.lift(values, m))
        swept = self.process(claim, use_cache=False)
        return [swept.at(k) for k in range(m + 1)]

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    @abstractmethod
    def _sweep(self, terminal: np.ndarray) -> list:
        """Per-step arrays of the conditional values of a leaf array."""


class RecursiveExpectation(FExpectationOperator):
    """Operator defined by a one-step rule composed backward."""

    @abstractmethod
    def one_step(self, values: np.ndarray, k: int) -> np.ndarray:
        ...

    def step(self, values: np.ndarray, k: int) -> np.ndarray:
        return self.one_step(np.asarray(values, dtype=float), k)

    def backward(self, values: np.ndarray, m: int) -> list:
        steps = [None] * (m + 1)
        steps[m] = np.asarray(values, dtype=float)
        for k in range(m - 1, -1, -1):
            steps[k] = self.one_step(steps[k + 1], k)
        return steps

    def _sweep(self, terminal: np.ndarray) -> list:
        return self.backward(terminal, self.tree.N)


# ==================== BUILT-IN OPERATORS ====================

class ClassicalExpectation(RecursiveExpectation):
    def __init__(self, tree: FiltrationTree):
        super().__init__(tree, zero_modulus(), Provenance.CLASSICAL, "classical")

    def one_step(self, values: np.ndarray, k: int) -> np.ndarray:
        return self.tree.mean_children(values, k)


class GeneratorExpectation(RecursiveExpectation):
    """
    E^g through the explicit BSDE step.

    The step weighs child c by 2^-d (1 + dt dg/dy + sqrt(dt) grad_z g . eps_c),
    so it is monotone iff g is (1 - K dt) / sqrt(d dt)-Lipschitz in z. The
    step therefore runs on g's envelope at that slope, which leaves Lipschitz
    drivers on fine enough trees untouched and changes sqrt(|z|) only on
    |z| < d dt.
    """

    def __init__(self, tree: FiltrationTree, g: Generator):
        super().__init__(tree, g.modulus, Provenance.FROM_GENERATOR, f"E^{g.name}")
        self.generator = g
        slope = max(0.0, 1.0 - g.lipschitz_y * tree.dt) / np.sqrt(tree.d * tree.dt)
        self.step_generator = g.lipschitz_in_z(slope)
        if self.step_generator is g:
            logger.debug("→ generator has no envelope; explicit step used as given", generator=g.name)

    def one_step(self, values: np.ndarray, k: int) -> np.ndarray:
        return explicit_step(self.tree, self.step_generator, values, k)[0]


class DriftUncertaintyExpectation(RecursiveExpectation):
    """
    sup over drifts |theta| <= mu of the theta-tilted child average.

    The tilted weights are (1 + sqrt(dt) theta . eps_c) / 2^d; the supremum is
    attained at theta = mu v / |v| with v = E[f eps | F_k].
    """

    def __init__(self, tree: FiltrationTree, mu: float):
        mu = float(mu)
        if mu < 0:
            raise ContractError(f"mu must be nonnegative, got {mu}")
        if mu * np.sqrt(tree.d * tree.dt) > 1.0:
            n_min = int(np.ceil(mu * mu * tree.d * tree.T))
            raise ContractError(
                f"drift uncertainty weights leave [0, 1]: mu*sqrt(d*dt) = "
                f"{mu * np.sqrt(tree.d * tree.dt):.3g} > 1; use N >= {n_min}"
            )
        super().__init__(tree, linear_modulus(mu), Provenance.DRIFT_UNCERTAINTY,
                         f"drift_uncertainty({mu:g})")
        self.mu = mu

    def one_step(self, values: np.ndarray, k: int) -> np.ndarray:
        tree = self.tree
        blocks = tree.children(values, k)
        v = (blocks @ tree.increments) / tree.branching
        norm = znorm(v)
        scale = np.divide(self.mu, norm, out=np.zeros_like(norm), where=norm > 0)
        theta = v * scale[:, None]
        weights = (1.0 + tree.sqrt_dt * (theta @ tree.increments.T)) / tree.branching
        return np.sum(weights * blocks, axis=1)


class UserDefinedExpectation(FExpectationOperator):
    """Black box: evaluator(xi, t) returns the step-t array of E[xi | F_t]."""

    def __init__(
        self,
        tree: FiltrationTree,
        evaluator: Callable[[AdaptedField, int], np.ndarray],
        modulus: Modulus,
        name: str = "user_defined",
    ):
        super().__init__(tree, modulus, Provenance.USER_DEFINED, name)
        self.evaluator = evaluator

    def _sweep(self, terminal: np.ndarray) -> list:
        xi = AdaptedField.claim(self.tree, terminal)
        steps = []
        for t in range(self.tree.N + 1):
            values = np.asarray(self.evaluator(xi, t), dtype=float)
            if values.shape != (self.tree.node_count(t),):
                raise ContractError(
                    f"{self.name} returned shape {values.shape} at step {t}, "
                    f"expected ({self.tree.node_count(t)},)"
                )
            if not np.all(np.isfinite(values)):
                raise NumericError(f"{self.name} returned a non-finite value", step=t,
                                   node=int(np.flatnonzero(~np.isfinite(values))[0]))
            steps.append(values)
        return steps


# ==================== FACTORIES ====================

def from_generator(g: Generator, tree: FiltrationTree, validate: bool = True) -> GeneratorExpectation:
    """Wrap E^g as an F-expectation; g must pass validation and satisfy g(t, y, 0) = 0."""
    if not g.zero_at_zero:
        raise ContractError(f"generator {g.name} does not satisfy g(t, y, 0) = 0")
    if validate:
        report = validate_generator(g, d=tree.d, horizon=tree.T)
        if not report.passed:
            first = report.witnesses[0].detail if report.witnesses else "see report"
            raise ContractError(
                f"generator {g.name} failed validation ({report.violation_count} violations, "
                f"first: {first})"
            )
    return GeneratorExpectation(tree, g)


def drift_uncertainty(mu: float, tree: FiltrationTree) -> DriftUncertaintyExpectation:
    return DriftUncertaintyExpectation(tree, mu)


def classical(tree: FiltrationTree) -> ClassicalExpectation:
    return ClassicalExpectation(tree)


def user_defined(
    tree: FiltrationTree,
    evaluator: Callable[[AdaptedField, int], np.ndarray],
    modulus: Modulus,
    name: str = "user_defined",
) -> UserDefinedExpectation:
    return UserDefinedExpectation(tree, evaluator, modulus, name)


def phi_expectation(phi: Modulus, tree: FiltrationTree, sign: int = 1) -> FExpectationOperator:
    """E^{phi} (sign=+1) or E^{-phi} (sign=-1) on the tree."""
    if phi.name == "zero":
        return ClassicalExpectation(tree)
    g = phi_norm(phi) if sign > 0 else neg_phi_norm(phi)
    return GeneratorExpectation(tree, g)


def make_operator(kind: str, tree: FiltrationTree, generator: Optional[Generator] = None,
                  **params: Any) -> FExpectationOperator:
    """Build an operator from a config key."""
    if kind == Provenance.CLASSICAL.value:
        return classical(tree)
    if kind == Provenance.DRIFT_UNCERTAINTY.value:
        return drift_uncertainty(params.get("mu", 0.0), tree)
    if kind == Provenance.FROM_GENERATOR.value:
        if generator is None:
            raise ContractError("operator 'from_generator' needs a generator section")
        return from_generator(generator, tree)
    raise ContractError(
        f"unknown operator {kind!r}; known: classical, drift_uncertainty, from_generator"
    )
