"""
E-martingale representation on the one-dimensional tree.

For a process y adapted over all steps, each one-step move splits exactly
into a drift and a martingale increment:

    Z_k = project_increment(y_{k+1}),   g_k = (y_k - E[y_{k+1}|F_k]) / dt

and the drift must satisfy |g_k| <= phi(|Z_k|) when y is a martingale of a
phi-dominated operator.
"""

from dataclasses import dataclass

import numpy as np

from ..config import settings
from ..errors import ContractError, UnsupportedError
from ..generators import Modulus, znorm
from ..lattice import AdaptedField
from ..schemas import CheckReport


@dataclass(frozen=True, eq=False)
class Representation:
    """Drift g and integrand Z of an adapted process, with the bound report."""

    g: AdaptedField
    Z: AdaptedField
    report: CheckReport


def extract_representation(y: AdaptedField, phi: Modulus, tol: float = None) -> Representation:
    tree = y.tree
    tol = settings.CHAIN_TOL if tol is None else tol
    if tree.d != 1:
        raise UnsupportedError(
            "representation extraction needs d = 1; the 2^d-ary tree has no exact "
            "predictable representation for d > 1"
        )
    if not y.is_process:
        raise ContractError("extract_representation needs y at every step")

    drifts, integrands = {}, {}
    report = CheckReport(check=f"representation_bound:{phi.name}")
    for k in range(tree.N):
        nxt = y.at(k + 1)
        z = tree.project_children(nxt, k)
        g = (y.at(k) - tree.mean_children(nxt, k)) / tree.dt
        drifts[k], integrands[k] = g, z
        report.compare_le(np.abs(g), phi(znorm(z)), tol, step=k, detail="|g| <= phi(|Z|)")

    report.metrics["max_abs_g"] = max(float(np.max(np.abs(v))) for v in drifts.values())
    return Representation(
        g=AdaptedField.partial(tree, drifts, f"g[{y.label}]"),
        Z=AdaptedField.partial(tree, integrands, f"Z[{y.label}]"),
        report=report,
    )


def representation_gap_check(
    rep_x: Representation, rep_y: Representation, phi: Modulus, tol: float = None
) -> CheckReport:
    """|g^X - g^Y| <= phi(|Z^X - Z^Y|) nodewise."""
    tol = settings.CHAIN_TOL if tol is None else tol
    report = CheckReport(check=f"representation_gap:{phi.name}")
    for k in rep_x.g.steps:
        lhs = np.abs(rep_x.g.at(k) - rep_y.g.at(k))
        rhs = phi(znorm(rep_x.Z.at(k) - rep_y.Z.at(k)))
        report.compare_le(lhs, rhs, tol, step=k, detail="|gX-gY| <= phi(|ZX-ZY|)")
    return report
