"""
BSDEs under an F-expectation

Discrete defining equation, for k = 0..N:

    y_k + z.B_k = E[X + z.B_N + sum_{j=k}^{N-1} (f(t_j, y_j) + eta_j) dt | F_k]

so y_N = X and the same-step term f(t_k, y_k) makes each step implicit.

picard_solve iterates the map of the defining equation in its translation
form, one operator sweep per iteration, over backward time windows of at
most 1/(2 lambda). The same-step term is resolved per node by the driver,
which keeps the map a contraction for large lambda * dt.
backward_oracle solves the same equation step by step and serves as an
independent check.
"""

import math
import weakref
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..config import settings
from ..errors import ContractError, ConvergenceError
from ..fexp import FExpectationOperator, Provenance, check_translation
from ..lattice import AdaptedField, FiltrationTree
from ..schemas import CheckReport
from .drivers import Driver, check_driver, fixed_point_solve

logger = structlog.get_logger(__name__)

_translation_ok: "weakref.WeakSet[FExpectationOperator]" = weakref.WeakSet()


@dataclass(frozen=True, eq=False)
class EfsdeProblem:
    """E(f, T, X, z) with an optional nonnegative source eta."""

    operator: FExpectationOperator
    driver: Driver
    terminal: AdaptedField
    z: np.ndarray = None
    eta: Optional[AdaptedField] = None
    label: str = ""

    def __post_init__(self):
        tree = self.operator.tree
        if self.terminal.tree is not tree:
            raise ContractError("terminal claim lives on a different tree than the operator")
        z = np.zeros(tree.d) if self.z is None else np.asarray(self.z, dtype=float).reshape(-1)
        if z.shape == (1,) and tree.d > 1:
            z = np.full(tree.d, z[0])
        if z.shape != (tree.d,):
            raise ContractError(f"z must have {tree.d} components, got {z.shape[0]}")
        object.__setattr__(self, "z", z)
        if self.eta is not None and (self.eta.tree is not tree or not all(self.eta.has(k) for k in range(tree.N))):
            raise ContractError("eta must be defined at steps 0..N-1 on the operator's tree")
        if not math.isfinite(self.driver.lipschitz):
            raise ContractError("driver Lipschitz constant must be finite")
        if not check_driver(self.driver, tree):
            raise ContractError(f"driver {self.driver.name} violates its Lipschitz constant")

    @property
    def tree(self) -> FiltrationTree:
        return self.operator.tree

    def eta_at(self, k: int) -> np.ndarray:
        if self.eta is None:
            return np.zeros(self.tree.node_count(k))
        return self.eta.at(k)

    def source(self, y: Sequence[np.ndarray], k: int) -> np.ndarray:
        """F_k = f(t_k, y_k) + eta_k"""
        return self.driver(k, self.tree.time(k), y[k]) + self.eta_at(k)

    def zb(self, k: int) -> np.ndarray:
        return self.tree.linear_brownian(self.z, k)


@dataclass
class PicardResult:
    """Picard fixed point with per-window iteration counts."""

    y: AdaptedField
    iterations: int
    residual: float
    windows: List[Tuple[int, int, int]] = field(default_factory=list)


# ==================== HELPERS ====================

def window_bounds(tree: FiltrationTree, lipschitz: float) -> List[Tuple[int, int]]:
    """Backward windows (lo, hi) of at most min(T, 1/(2 lambda)) each, never empty."""
    if lipschitz <= 0:
        width = tree.N
    else:
        span = min(tree.T, 1.0 / (2.0 * lipschitz))
        width = max(1, int(math.floor(span / tree.dt + 1e-9)))
    windows = []
    hi = tree.N
    while hi > 0:
        lo = max(0, hi - width)
        windows.append((lo, hi))
        hi = lo
    return windows


def iteration_cap(tol: float) -> int:
    return 10 * int(math.ceil(math.log2(1.0 / tol)))


def translation_preflight(E: FExpectationOperator) -> None:
    """Black-box operators must pass check_translation once before use."""
    if E.provenance != Provenance.USER_DEFINED or E in _translation_ok:
        return
    report = check_translation(E)
    if not report.passed:
        w = report.witnesses[0]
        raise ContractError(
            f"operator {E.name} fails translation invariance (step={w.step}, node={w.node}); "
            "BSDEs under it are not well posed"
        )
    _translation_ok.add(E)


def defining_residual(problem: EfsdeProblem, y: Sequence[np.ndarray]) -> float:
    """sup |E[X + zB_N + sum_j F_j dt | F_k] - zB_k - sum_{j<k} F_j dt - y_k|."""
    tree, E = problem.tree, problem.operator
    N, dt = tree.N, tree.dt
    sources = [problem.source(y, j) * dt for j in range(N)]
    claim = problem.terminal.terminal + problem.zb(N)
    for j in range(N):
        claim = claim + tree.lift(sources[j], j, N)
    swept = E.backward(claim, N)

    worst = 0.0
    prefix = np.zeros(1)
    for k in range(N + 1):
        gap = swept[k] - problem.zb(k) - prefix - y[k]
        worst = max(worst, float(np.max(np.abs(gap))))
        if k < N:
            prefix = np.repeat(prefix + sources[k], tree.branching)
    return worst


# ==================== SOLVERS ====================

def picard_solve(problem: EfsdeProblem, tol: Optional[float] = None) -> PicardResult:
    """Fixed point of the defining equation with backward time patching."""
    tol = settings.PICARD_TOL if tol is None else tol
    tree, E, f = problem.tree, problem.operator, problem.driver
    translation_preflight(E)
    dt, N = tree.dt, tree.N
    cap = iteration_cap(tol)

    y: List[Optional[np.ndarray]] = [None] * (N + 1)
    y[N] = np.asarray(problem.terminal.terminal, dtype=float)
    windows = []
    total = 0

    for lo, hi in window_bounds(tree, f.lipschitz):
        anchor = y[hi] + problem.zb(hi)
        # f = 0 solution of the window as the starting iterate
        start = E.backward(anchor, hi)
        for k in range(lo, hi):
            y[k] = start[k] - problem.zb(k)

        change = np.inf
        for iteration in range(1, cap + 1):
            sources = {j: problem.source(y, j) * dt for j in range(lo, hi)}
            claim = anchor
            for j in range(lo, hi):
                claim = claim + tree.lift(sources[j], j, hi)
            swept = E.backward(claim, hi)

            change = 0.0
            prefix = np.zeros(tree.node_count(lo))
            for k in range(lo, hi):
                prefix = prefix + sources[k]
                rhs = swept[k] - problem.zb(k) - prefix + problem.eta_at(k) * dt
                new = f.solve_implicit(k, tree.time(k), rhs, dt)
                change = max(change, float(np.max(np.abs(new - y[k]))))
                y[k] = new
                prefix = np.repeat(prefix, tree.branching)
            if change <= tol:
                break
        else:
            raise ConvergenceError(
                f"Picard iteration on window [{lo}, {hi}] hit its cap of {cap}", residual=change, step=lo
            )
        windows.append((lo, hi, iteration))
        total += iteration
        logger.debug("→ window converged", lo=lo, hi=hi, iterations=iteration, change=change)

    residual = defining_residual(problem, y)
    logger.info("✓ Picard solve", driver=f.name, operator=E.name, windows=len(windows),
                iterations=total, residual=residual)
    return PicardResult(
        y=AdaptedField.process(tree, y, f"y[{problem.label or f.name}]"),
        iterations=total,
        residual=residual,
        windows=windows,
    )


def backward_oracle(problem: EfsdeProblem) -> AdaptedField:
    """Step-by-step backward solution with a generic nodewise fixed point."""
    tree, E, f = problem.tree, problem.operator, problem.driver
    dt, N = tree.dt, tree.N
    if f.lipschitz * dt >= 1.0:
        raise ContractError(
            f"backward oracle needs lambda*dt < 1, got lambda={f.lipschitz:g}, dt={dt:g}"
        )
    y: List[Optional[np.ndarray]] = [None] * (N + 1)
    y[N] = np.asarray(problem.terminal.terminal, dtype=float)
    for k in range(N - 1, -1, -1):
        base = E.step(y[k + 1] + problem.zb(k + 1), k) - problem.zb(k) + problem.eta_at(k) * dt
        t = tree.time(k)
        y[k] = fixed_point_solve(lambda v: base + dt * f(k, t, v), base,
                                 tol=settings.ORACLE_TOL, step=k)
    return AdaptedField.process(tree, y, f"oracle[{problem.label or f.name}]")


def martingale_part(problem: EfsdeProblem, y: AdaptedField) -> AdaptedField:
    """M_k = y_k + z.B_k + sum_{j<k} (f(t_j, y_j) + eta_j) dt"""
    tree = problem.tree
    values = [y.at(k) for k in range(tree.N + 1)]
    steps = []
    prefix = np.zeros(1)
    for k in range(tree.N + 1):
        steps.append(values[k] + problem.zb(k) + prefix)
        if k < tree.N:
            prefix = np.repeat(prefix + problem.source(values, k) * tree.dt, tree.branching)
    return AdaptedField.process(tree, steps, f"M[{y.label}]")


def compare_solutions(
    problem: EfsdeProblem, problem_bar: EfsdeProblem, tol: Optional[float] = None
) -> CheckReport:
    """Given X_bar >= X and eta_bar >= eta, assert y_bar >= y nodewise."""
    tol = settings.CHAIN_TOL if tol is None else tol
    tree = problem.tree
    if problem.operator is not problem_bar.operator:
        raise ContractError("comparison needs both problems under the same operator")
    if not problem.driver.same_as(problem_bar.driver):
        raise ContractError("comparison needs both problems to share the driver f")
    if not np.array_equal(problem.z, problem_bar.z):
        raise ContractError("comparison needs the same direction z")
    if np.any(problem_bar.terminal.terminal < problem.terminal.terminal):
        leaf = int(np.flatnonzero(problem_bar.terminal.terminal < problem.terminal.terminal)[0])
        raise ContractError(f"comparison needs X_bar >= X (leaf {leaf} violates)")
    for k in range(tree.N):
        gap = problem_bar.eta_at(k) - problem.eta_at(k)
        if np.any(gap < 0):
            raise ContractError(
                f"comparison needs eta_bar >= eta (step {k}, node {int(np.flatnonzero(gap < 0)[0])})"
            )

    y = picard_solve(problem).y
    y_bar = picard_solve(problem_bar).y
    report = CheckReport(check="efsde_comparison")
    for k in range(tree.N + 1):
        report.compare_le(y.at(k), y_bar.at(k), tol, step=k, detail="y <= y_bar")
    return report
