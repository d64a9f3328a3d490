"""
Filtration Tree

Full non-recombining 2^d-ary event tree driven by a scaled Rademacher walk.

Node addressing: step k holds b^k nodes (b = 2^d); the children of node i
at step k are the consecutive indices i*b .. i*b + b - 1 at step k+1. Child
c moves coordinate j by eps[c, j] = +1 if bit (d-1-j) of c is set, else -1,
so for d = 1 child 0 is the down move and child 1 the up move.

With this layout node i at step k owns the leaf block
[i * b^(N-k), (i+1) * b^(N-k)), and lifting a step-k array to step m is a
plain np.repeat.
"""

from typing import Union

import numpy as np
import structlog

from ..config import settings
from ..errors import ContractError, ResourceBudgetError
from .field import AdaptedField
from .grid import TimeGrid

logger = structlog.get_logger(__name__)


def increment_table(d: int) -> np.ndarray:
    """(2^d, d) table of child increments in child order."""
    b = 2 ** d
    codes = np.arange(b)[:, None]
    shifts = (d - 1 - np.arange(d))[None, :]
    return (2 * ((codes >> shifts) & 1) - 1).astype(float)


class FiltrationTree:
    """Time grid plus the exact Rademacher filtration on it."""

    def __init__(self, grid: TimeGrid, dimension: int = 1):
        if dimension < 1:
            raise ContractError(f"dimension must be >= 1, got {dimension}")
        exponent = grid.steps * dimension
        if exponent > settings.NLX_MAX_TREE_EXPONENT:
            raise ResourceBudgetError(exponent, settings.NLX_MAX_TREE_EXPONENT)

        self.grid = grid
        self.dimension = dimension
        self.branching = 2 ** dimension
        self.increments = increment_table(dimension)
        self.increments.flags.writeable = False

        brownian = [np.zeros((1, dimension))]
        for k in range(grid.steps):
            prev = brownian[-1]
            step = np.repeat(prev, self.branching, axis=0) + grid.sqrt_dt * np.tile(
                self.increments, (prev.shape[0], 1)
            )
            brownian.append(step)
        self.brownian = AdaptedField.process(self, brownian)

    def __repr__(self) -> str:
        return f"FiltrationTree(T={self.T}, N={self.N}, d={self.dimension})"

    # ==================== SHAPE ====================

    @property
    def T(self) -> float:
        return self.grid.horizon

    @property
    def N(self) -> int:
        return self.grid.steps

    @property
    def d(self) -> int:
        return self.dimension

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def sqrt_dt(self) -> float:
        return self.grid.sqrt_dt

    def node_count(self, k: int) -> int:
        return self.branching ** k

    @property
    def leaf_count(self) -> int:
        return self.node_count(self.N)

    def block(self, k: int, m: int = None) -> int:
        """Number of step-m descendants of one step-k node (m defaults to N)."""
        m = self.N if m is None else m
        return self.branching ** (m - k)

    def time(self, k: int) -> float:
        return self.grid.time(k)

    # ==================== ARRAY PRIMITIVES ====================

    def lift(self, values: np.ndarray, k: int, m: int = None) -> np.ndarray:
        """Broadcast a step-k array to step m (default: the leaves)."""
        m = self.N if m is None else m
        if m < k:
            raise ContractError(f"cannot lift step {k} values back to step {m}")
        return np.repeat(values, self.block(k, m), axis=0)

    def children(self, values: np.ndarray, k: int) -> np.ndarray:
        """Reshape step-(k+1) values to (n_k, b, ...) child blocks."""
        expected = self.node_count(k + 1)
        if values.shape[0] != expected:
            raise ContractError(
                f"expected {expected} values at step {k + 1}, got {values.shape[0]}"
            )
        return values.reshape((self.node_count(k), self.branching) + values.shape[1:])

    def mean_children(self, values: np.ndarray, k: int) -> np.ndarray:
        """Exact one-step conditional expectation of step-(k+1) values."""
        return self.children(values, k).mean(axis=1)

    def project_children(self, values: np.ndarray, k: int) -> np.ndarray:
        """(n_k, d) array E[f * eps | F_k] / sqrt(dt) of scalar step-(k+1) values."""
        blocks = self.children(values, k)
        return (blocks @ self.increments) / (self.branching * self.sqrt_dt)

    def mean_to(self, values: np.ndarray, m: int, k: int) -> np.ndarray:
        """Iterated one-step averaging from step m down to step k."""
        for j in range(m - 1, k - 1, -1):
            values = self.mean_children(values, j)
        return values

    def brownian_at(self, k: int) -> np.ndarray:
        return self.brownian.at(k)

    def linear_brownian(self, z, k: int) -> np.ndarray:
        """Scalar z . B_k at every step-k node."""
        z = np.broadcast_to(np.asarray(z, dtype=float), (self.dimension,))
        return self.brownian.at(k) @ z

    def is_measurable(self, values: np.ndarray, k: int, tol: float = 0.0) -> bool:
        """True if step-m values (m >= k) are constant on every step-k block."""
        rows = values.reshape(self.node_count(k), -1)
        return bool(np.all(np.abs(rows - rows[:, :1]) <= tol))

    def measurable_step(self, leaves: np.ndarray, tol: float = 0.0) -> int:
        """Smallest k such that the leaf array is F_k-measurable."""
        for k in range(self.N + 1):
            if self.is_measurable(leaves, k, tol):
                return k
        return self.N


def build_tree(grid: Union[TimeGrid, float], d: int = 1, steps: int = None) -> FiltrationTree:
    """Build the filtration tree (accepts a TimeGrid or a horizon plus steps)."""
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(float(grid), int(steps))
    tree = FiltrationTree(grid, d)
    logger.debug("✓ tree built", T=tree.T, N=tree.N, d=d, leaves=tree.leaf_count)
    return tree


# ==================== FIELD OPERATIONS ====================

def cond_expect(f: AdaptedField, k: int) -> AdaptedField:
    """E[f_{k+1} | F_k] as a step-k slice."""
    tree = f.tree
    if not 0 <= k < tree.N or not f.has(k + 1):
        raise ContractError(f"cond_expect needs a field defined at step {k + 1}")
    return AdaptedField.slice(tree, k, tree.mean_children(f.at(k + 1), k))


def project_increment(f: AdaptedField, k: int) -> AdaptedField:
    """Martingale-increment coefficient of f_{k+1} at step k, as a d-vector slice."""
    tree = f.tree
    if not 0 <= k < tree.N or not f.has(k + 1):
        raise ContractError(f"project_increment needs a field defined at step {k + 1}")
    values = f.at(k + 1)
    if values.ndim != 1:
        raise ContractError("project_increment takes a scalar field")
    return AdaptedField.slice(tree, k, tree.project_children(values, k))
