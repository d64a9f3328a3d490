"""
Report Models

Pydantic models for every checker result, so reports validate on the way
out and serialize to JSON without custom encoders.
"""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from .config import settings


# ==================== WITNESSES ====================

class Witness(BaseModel):
    """One violated inequality at one node."""
    step: Optional[int] = None
    node: Optional[int] = None
    lhs: float
    rhs: float
    detail: Optional[str] = None


class CheckReport(BaseModel):
    """Outcome of one check: pass iff no witness was recorded"""
    check: str
    passed: bool = True
    witnesses: List[Witness] = []
    violation_count: int = 0
    metrics: Dict[str, float] = {}
    notes: List[str] = []

    @property
    def ok(self) -> bool:
        return self.passed

    @property
    def violations(self) -> List[Witness]:
        return self.witnesses

    def add_witness(self, witness: Witness) -> None:
        self.violation_count += 1
        self.passed = False
        if len(self.witnesses) < settings.MAX_WITNESSES:
            self.witnesses.append(witness)

    def compare_le(
        self,
        lhs: np.ndarray,
        rhs: np.ndarray,
        tol: float,
        step: Optional[int] = None,
        detail: Optional[str] = None,
    ) -> None:
        """Record a witness for every node where lhs > rhs + tol (or a value is not finite)."""
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        bad = ~(lhs <= rhs + tol)
        for node in np.flatnonzero(bad):
            self.add_witness(Witness(
                step=step, node=int(node), lhs=float(lhs[node]), rhs=float(rhs[node]), detail=detail
            ))

    def compare_eq(
        self,
        lhs: np.ndarray,
        rhs: np.ndarray,
        tol: float,
        step: Optional[int] = None,
        detail: Optional[str] = None,
    ) -> None:
        """Record a witness for every node where |lhs - rhs| > tol."""
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        bad = ~(np.abs(lhs - rhs) <= tol)
        for node in np.flatnonzero(bad):
            self.add_witness(Witness(
                step=step, node=int(node), lhs=float(lhs[node]), rhs=float(rhs[node]), detail=detail
            ))

    def merge(self, other: "CheckReport") -> None:
        """Fold another report's witnesses into this one (deterministic order)."""
        for witness in other.witnesses:
            self.add_witness(witness)
        self.violation_count += other.violation_count - len(other.witnesses)
        if other.violation_count:
            self.passed = False
        self.notes.extend(other.notes)


class AxiomReport(BaseModel):
    """Per-axiom results for one operator"""
    operator: str
    monotonicity: CheckReport
    constant_preservation: CheckReport
    consistency: CheckReport
    zero_one_law: CheckReport

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports())

    def reports(self) -> List[CheckReport]:
        return [self.monotonicity, self.constant_preservation, self.consistency, self.zero_one_law]


# ==================== REPRESENTATION ====================

class ClaimError(BaseModel):
    """Nodewise error between an operator and E^g for one claim"""
    claim: str
    max_error: float
    per_step: List[float]
    extrapolated_nodes: List[Witness] = []
    extrapolated_count: int = 0


class RepresentationReport(BaseModel):
    """Outcome of verify_representation"""
    check: str = "represent"
    passed: bool = True
    tolerance: float
    claims: List[ClaimError] = []
    notes: List[str] = []

    @property
    def max_error(self) -> float:
        return max((c.max_error for c in self.claims), default=0.0)


# ==================== DOOB-MEYER ====================

class LevelDiagnostics(BaseModel):
    """Per-level penalization diagnostics (one CSV row)"""
    level: float
    n_dt: float
    sup_gap: float
    monotonicity_margin: Optional[float] = None
    a_terminal_mean: float
    a_terminal_max: float
    a_terminal_sq_mean: float
    energy: Optional[float] = None
    residual: float
    picard_iterations: int
    oracle_gap: Optional[float] = None
    oracle_skipped: bool = False


# ==================== RUN ====================

class RunReport(BaseModel):
    """Top-level report written by `nlx run`"""
    tool_version: str
    config_hash: str
    passed: bool = True
    checks: List[CheckReport] = []
    tables: List[str] = []
    meta: Dict[str, Any] = Field(default_factory=dict)
