"""
BSDE checks - comparison, symmetry and the explicit/implicit scheme gap.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Sequence

import numpy as np
import pandas as pd
import structlog

from ..config import settings
from ..errors import ContractError
from ..generators import Generator, Modulus, neg_phi_norm, phi_norm
from ..lattice import AdaptedField, FiltrationTree, TimeGrid, build_tree
from ..schemas import CheckReport
from .solver import Scheme, solve_bsde

logger = structlog.get_logger(__name__)


def comparison_check(
    g: Generator,
    xi1: AdaptedField,
    xi2: AdaptedField,
    scheme: Scheme = Scheme.EXPLICIT,
    tol: float = None,
) -> CheckReport:
    """Given xi1 >= xi2 on the leaves, assert Y1 >= Y2 at every node."""
    tol = settings.EXACT_TOL if tol is None else tol
    gap = xi1.terminal - xi2.terminal
    if np.any(gap < 0):
        leaf = int(np.flatnonzero(gap < 0)[0])
        raise ContractError(f"comparison needs xi1 >= xi2 on every leaf (leaf {leaf} violates)")

    y1 = solve_bsde(g, xi1, scheme=scheme).Y
    y2 = solve_bsde(g, xi2, scheme=scheme).Y
    report = CheckReport(check=f"comparison:{g.name}")
    for k in range(xi1.tree.N + 1):
        report.compare_le(y2.at(k), y1.at(k), tol, step=k, detail=f"{xi2.label} <= {xi1.label}")
    return report


def symmetry_check(phi: Modulus, claims: Iterable[AdaptedField], tol: float = 0.0) -> CheckReport:
    """-E^{-phi}[X|F_t] == E^{phi}[-X|F_t] at every node."""
    plus, minus = phi_norm(phi), neg_phi_norm(phi)
    report = CheckReport(check=f"symmetry:{phi.name}")
    for xi in claims:
        lhs = solve_bsde(minus, xi).Y
        rhs = solve_bsde(plus, -xi).Y
        for k in range(xi.tree.N + 1):
            report.compare_eq(-lhs.at(k), rhs.at(k), tol, step=k, detail=xi.label)
    return report


# ==================== SCHEME GAP ====================

@dataclass
class SchemeGapStudy:
    """|Y0(explicit) - Y0(implicit)| per step count, with a log-log order fit."""

    generator: str
    rows: List[dict] = field(default_factory=list)

    @property
    def order(self) -> float:
        """Slope of log(gap) against log(dt); nan when fewer than two positive gaps."""
        frame = self.to_frame()
        frame = frame[frame["gap"] > 0]
        if len(frame) < 2:
            return float("nan")
        slope, _ = np.polyfit(np.log(frame["dt"]), np.log(frame["gap"]), 1)
        return float(slope)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["N", "dt", "explicit_y0", "implicit_y0", "gap",
                                                "refinement_gap"])


def scheme_gap(
    g: Generator,
    claim: Callable[[FiltrationTree], AdaptedField],
    steps: Sequence[int],
    horizon: float = 1.0,
    d: int = 1,
) -> SchemeGapStudy:
    """Solve both schemes for each N; refinement_gap compares against the finest N."""
    study = SchemeGapStudy(generator=g.name)
    values = []
    for n in sorted(steps):
        tree = build_tree(TimeGrid(horizon, n), d)
        xi = claim(tree)
        explicit = solve_bsde(g, xi, scheme=Scheme.EXPLICIT).y0
        implicit = solve_bsde(g, xi, scheme=Scheme.IMPLICIT).y0
        values.append((n, tree.dt, explicit, implicit))
        logger.debug("→ scheme gap", generator=g.name, N=n, gap=abs(explicit - implicit))

    reference = values[-1][3]
    for n, dt, explicit, implicit in values:
        study.rows.append({
            "N": n,
            "dt": dt,
            "explicit_y0": explicit,
            "implicit_y0": implicit,
            "gap": abs(explicit - implicit),
            "refinement_gap": abs(implicit - reference),
        })
    return study
