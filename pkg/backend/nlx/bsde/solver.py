"""
Discrete BSDE Solver

Backward recursion on the tree:

    Z_k = project_increment(Y_{k+1})
    explicit: Y_k = E[Y_{k+1}|F_k] + dt * g(t_k, E[Y_{k+1}|F_k], Z_k)
    implicit: Y_k = E[Y_{k+1}|F_k] + dt * g(t_k, Y_k, Z_k)

The implicit equation is solved nodewise by fixed-point iteration, which
contracts when K * dt < 1.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple, Union

import numpy as np
import structlog

from ..config import settings
from ..errors import ContractError, ConvergenceError, NumericError
from ..generators import Generator
from ..lattice import AdaptedField, FiltrationTree

logger = structlog.get_logger(__name__)


class Scheme(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


def _check_finite(values: np.ndarray, k: int, what: str) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        node = int(np.flatnonzero(~finite.reshape(finite.shape[0], -1).all(axis=1))[0])
        raise NumericError(f"non-finite {what}", step=k, node=node)


def explicit_step(
    tree: FiltrationTree, g: Generator, next_values: np.ndarray, k: int
) -> Tuple[np.ndarray, np.ndarray]:
    """One explicit backward step; returns (Y_k, Z_k)."""
    cond = tree.mean_children(next_values, k)
    z = tree.project_children(next_values, k)
    y = cond + tree.dt * g(tree.time(k), cond, z)
    _check_finite(y, k, "BSDE value")
    return y, z


def implicit_step(
    tree: FiltrationTree, g: Generator, next_values: np.ndarray, k: int
) -> Tuple[np.ndarray, np.ndarray]:
    """One implicit backward step; returns (Y_k, Z_k)."""
    dt, t = tree.dt, tree.time(k)
    cond = tree.mean_children(next_values, k)
    z = tree.project_children(next_values, k)
    y = cond + dt * g(t, cond, z)
    if not g.depends_on_y:
        _check_finite(y, k, "BSDE value")
        return y, z

    change = np.inf
    for _ in range(settings.IMPLICIT_MAX_ITER):
        y_new = cond + dt * g(t, y, z)
        _check_finite(y_new, k, "implicit iterate")
        change = float(np.max(np.abs(y_new - y)))
        y = y_new
        if change <= settings.FIXED_POINT_TOL:
            return y, z
    raise ConvergenceError("implicit BSDE step did not converge", residual=change, step=k)


@dataclass(frozen=True, eq=False)
class BsdeSolution:
    """(Y, Z) on the tree; Y over steps 0..N, Z over 0..N-1."""

    Y: AdaptedField
    Z: AdaptedField
    scheme: Scheme
    generator: Generator

    @property
    def tree(self) -> FiltrationTree:
        return self.Y.tree

    @property
    def y0(self) -> float:
        return float(self.Y.at(0)[0])

    def residual(self) -> float:
        """sup over nodes of the one-step dynamics residual."""
        tree, g = self.tree, self.generator
        worst = 0.0
        for k in range(tree.N):
            cond = tree.mean_children(self.Y.at(k + 1), k)
            y_arg = cond if self.scheme == Scheme.EXPLICIT else self.Y.at(k)
            rhs = cond + tree.dt * g(tree.time(k), y_arg, self.Z.at(k))
            worst = max(worst, float(np.max(np.abs(self.Y.at(k) - rhs))))
        return worst

    def to_json(self) -> Dict[str, Any]:
        tree = self.tree
        return {
            "meta": {"T": tree.T, "N": tree.N, "d": tree.d,
                     "scheme": self.scheme.value, "generator": self.generator.name},
            "Y": {str(k): self.Y.at(k).tolist() for k in self.Y.steps},
            "Z": {str(k): self.Z.at(k).tolist() for k in self.Z.steps},
        }


def solve_bsde(
    g: Generator,
    xi: AdaptedField,
    tree: FiltrationTree = None,
    scheme: Union[Scheme, str] = Scheme.EXPLICIT,
) -> BsdeSolution:
    """Solve the discrete BSDE with driver g and terminal claim xi."""
    tree = xi.tree if tree is None else tree
    scheme = Scheme(scheme)
    if xi.tree is not tree:
        raise ContractError("terminal claim lives on a different tree")
    terminal = xi.terminal
    _check_finite(terminal, tree.N, "terminal claim")
    if scheme == Scheme.IMPLICIT and g.lipschitz_y * tree.dt >= 1.0:
        raise ContractError(
            f"implicit scheme needs K*dt < 1, got K={g.lipschitz_y:g}, dt={tree.dt:g}"
        )

    step = explicit_step if scheme == Scheme.EXPLICIT else implicit_step
    ys = [None] * (tree.N + 1)
    zs = {}
    ys[tree.N] = terminal
    for k in range(tree.N - 1, -1, -1):
        ys[k], zs[k] = step(tree, g, ys[k + 1], k)

    logger.debug("✓ BSDE solved", generator=g.name, scheme=scheme.value, N=tree.N,
                 y0=float(ys[0][0]))
    return BsdeSolution(
        Y=AdaptedField.process(tree, ys, f"E^{g.name}[{xi.label}]"),
        Z=AdaptedField.partial(tree, zs, f"Z^{g.name}[{xi.label}]"),
        scheme=scheme,
        generator=g,
    )


def g_expectation(
    g: Generator, xi: AdaptedField, t: int, scheme: Union[Scheme, str] = Scheme.EXPLICIT
) -> AdaptedField:
    """E^g[xi | F_t] as a step-t slice."""
    tree = xi.tree
    if not 0 <= t <= tree.N:
        raise ContractError(f"step {t} outside 0..{tree.N}")
    solution = solve_bsde(g, xi, tree, scheme)
    return AdaptedField.slice(tree, t, solution.Y.at(t), solution.Y.label)
