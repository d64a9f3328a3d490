"""
Representation checks for recovered generators

verify_representation compares an operator with E^{g_hat} nodewise on a
claim corpus; uniqueness_check compares two recoveries; null_integral_check
confirms that E^{g_hat}[ -sum g_hat(eta) dt + sum eta dB | F_r ] vanishes.
"""

from typing import Optional, Sequence

import numpy as np
import structlog

from ..bsde import explicit_step, solve_bsde
from ..concurrency import parallel_map
from ..config import settings
from ..errors import ContractError
from ..fexp import FExpectationOperator, default_claims
from ..generators import znorm
from ..lattice import AdaptedField, FiltrationTree
from ..schemas import CheckReport, ClaimError, RepresentationReport, Witness
from .recovery import RecoveredGenerator, normalize_grid

logger = structlog.get_logger(__name__)


def _check_tree(g_hat: RecoveredGenerator, tree: FiltrationTree) -> None:
    if g_hat.N != tree.N or g_hat.d != tree.d or abs(g_hat.horizon - tree.T) > settings.EXACT_TOL:
        raise ContractError(
            f"recovered generator is for (T={g_hat.horizon:g}, N={g_hat.N}, d={g_hat.d}), "
            f"tree is (T={tree.T:g}, N={tree.N}, d={tree.d})"
        )


def _extrapolation_scan(g_hat: RecoveredGenerator, swept: AdaptedField, error: ClaimError) -> None:
    """Flag nodes whose integrand Z leaves the tabulated grid."""
    tree = swept.tree
    for k in range(tree.N):
        z = tree.project_children(swept.at(k + 1), k)
        _, outside = g_hat.evaluate(k, z)
        for node in np.flatnonzero(outside):
            error.extrapolated_count += 1
            if len(error.extrapolated_nodes) < settings.MAX_WITNESSES:
                error.extrapolated_nodes.append(Witness(
                    step=k, node=int(node), lhs=float(znorm(z[node:node + 1])[0]),
                    rhs=g_hat.max_radius, detail="|Z| outside the z-grid",
                ))


def _claim_error(E: FExpectationOperator, g_hat: RecoveredGenerator, xi: AdaptedField) -> ClaimError:
    tree = E.tree
    swept = E.process(xi)
    solution = solve_bsde(g_hat.as_generator(), xi, tree)
    per_step = [
        float(np.max(np.abs(swept.at(k) - solution.Y.at(k)))) for k in range(tree.N + 1)
    ]
    error = ClaimError(claim=xi.label, max_error=max(per_step), per_step=per_step)
    _extrapolation_scan(g_hat, swept, error)
    return error


def verify_representation(
    E: FExpectationOperator,
    g_hat: RecoveredGenerator,
    claims: Optional[Sequence[AdaptedField]] = None,
    tol: Optional[float] = None,
) -> RepresentationReport:
    """Nodewise max |E[X|F_k] - E^{g_hat}[X|F_k]| per claim and step."""
    tree = E.tree
    tol = settings.CHAIN_TOL if tol is None else tol
    _check_tree(g_hat, tree)
    claims = default_claims(tree) if claims is None else list(claims)
    if not claims:
        raise ContractError("verify_representation needs at least one claim")

    errors = parallel_map(lambda xi: _claim_error(E, g_hat, xi), claims)
    report = RepresentationReport(tolerance=tol, claims=errors)
    report.passed = report.max_error <= tol
    flagged = [e.claim for e in errors if e.extrapolated_count]
    if flagged:
        report.notes.append(f"grid extrapolation in: {', '.join(flagged)}")
    if report.passed:
        logger.info("✓ representation verified", operator=E.name, max_error=report.max_error)
    else:
        logger.warning("✗ representation mismatch", operator=E.name, max_error=report.max_error)
    return report


def uniqueness_check(
    g1: RecoveredGenerator,
    g2: RecoveredGenerator,
    z_grid=None,
    steps: Optional[Sequence[int]] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """max |g1 - g2| over a z-grid and a step grid."""
    tol = settings.CHAIN_TOL if tol is None else tol
    if g1.d != g2.d or g1.N != g2.N:
        raise ContractError("recovered generators live on different trees")
    grid = g1.z_grid if z_grid is None else normalize_grid(z_grid, g1.d)
    steps = sorted(set(g1.steps) | set(g2.steps)) if steps is None else list(steps)
    report = CheckReport(check="uniqueness")
    worst = 0.0
    for k in steps:
        a, _ = g1.evaluate(k, grid)
        b, _ = g2.evaluate(k, grid)
        worst = max(worst, float(np.max(np.abs(a - b))))
        report.compare_eq(a, b, tol, step=k, detail="g1 = g2 on the grid")
    report.metrics["max_difference"] = worst
    return report


def null_integral_check(
    g_hat: RecoveredGenerator,
    eta: AdaptedField,
    r: int,
    t: int,
    tol: Optional[float] = None,
) -> CheckReport:
    """E^{g_hat}[ sum_{r<=j<t} (-g_hat(t_j, eta_j) dt + eta_j . dB_j) | F_r ] = 0 nodewise."""
    tree = eta.tree
    tol = settings.CHAIN_TOL if tol is None else tol
    _check_tree(g_hat, tree)
    if not 0 <= r <= t <= tree.N:
        raise ContractError(f"need 0 <= r <= t <= N, got r={r}, t={t}")
    missing = [j for j in range(r, t) if not eta.has(j)]
    if missing:
        raise ContractError(f"eta is missing steps {missing}")

    report = CheckReport(check="null_integral")
    extrapolated = 0
    total = np.zeros(tree.node_count(r))
    for j in range(r, t):
        eta_j = np.asarray(eta.at(j), dtype=float).reshape(tree.node_count(j), tree.d)
        drift, outside = g_hat.evaluate(j, eta_j)
        extrapolated += int(outside.sum())
        dB = tree.brownian_at(j + 1) - tree.lift(tree.brownian_at(j), j, j + 1)
        martingale = np.sum(tree.lift(eta_j, j, j + 1) * dB, axis=-1)
        total = tree.lift(total, j, j + 1) - tree.lift(drift * tree.dt, j, j + 1) + martingale

    generator = g_hat.as_generator()
    values = total
    for k in range(t - 1, r - 1, -1):
        values = explicit_step(tree, generator, values, k)[0]
    report.compare_eq(values, np.zeros_like(values), tol, step=r, detail="E^g[null integral|F_r] = 0")
    report.metrics["residual"] = float(np.max(np.abs(values))) if values.size else 0.0
    report.metrics["extrapolated"] = float(extrapolated)
    if extrapolated:
        report.notes.append(f"{extrapolated} eta values outside the z-grid")
    return report
