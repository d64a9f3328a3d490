"""
F-expectation checkers

Public entry points over the rule classes. Corpora default to the seeded
corpus of `nlx.fexp.corpus`; tolerances default to settings (EXACT_TOL for
single-sweep identities, CHAIN_TOL for inequalities chaining several
sweeps). Only violated preconditions raise.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..config import settings
from ..errors import ContractError
from ..generators import Modulus
from ..lattice import AdaptedField, Event, StoppingTime
from ..schemas import AxiomReport, CheckReport
from .corpus import all_pairs, default_claims, default_events, measurable_claims, noise_claim, ordered_pairs
from .operators import FExpectationOperator
from .rules import KINDS, AxiomRules, DominationRules, StoppingRules

logger = structlog.get_logger(__name__)

Pair = Tuple[AdaptedField, AdaptedField]


def _log(report: CheckReport, operator: FExpectationOperator) -> CheckReport:
    if report.passed:
        logger.info(f"✓ {report.check}", operator=operator.name)
    else:
        logger.warning(f"✗ {report.check}", operator=operator.name,
                       violations=report.violation_count)
    return report


# ==================== AXIOMS ====================

def check_axioms(
    E: FExpectationOperator,
    claims: Optional[Sequence[AdaptedField]] = None,
    events: Optional[Sequence[Event]] = None,
    tol: Optional[float] = None,
) -> AxiomReport:
    """Monotonicity, constant preservation, consistency and the 0-1 law on a corpus."""
    tol = settings.EXACT_TOL if tol is None else tol
    claims = default_claims(E.tree) if claims is None else list(claims)
    events = default_events(E.tree) if events is None else list(events)
    if not claims or not events:
        raise ContractError("axiom checks need a nonempty claim corpus and event corpus")

    report = AxiomReport(
        operator=E.name,
        monotonicity=AxiomRules.monotonicity(E, ordered_pairs(claims), tol),
        constant_preservation=AxiomRules.constant_preservation(E, measurable_claims(E.tree, claims), tol),
        consistency=AxiomRules.consistency(E, claims, tol),
        zero_one_law=AxiomRules.zero_one_law(E, claims, events, tol),
    )
    for sub in report.reports():
        _log(sub, E)
    return report


# ==================== DOMINATION ====================

def check_domination(
    E: FExpectationOperator,
    phi: Optional[Modulus] = None,
    pairs: Optional[Sequence[Pair]] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """Domination: upper form plus the two-sided lower form, nodewise for every step."""
    tol = settings.CHAIN_TOL if tol is None else tol
    phi = E.modulus if phi is None else phi
    pairs = all_pairs(default_claims(E.tree)) if pairs is None else list(pairs)
    upper, lower = DominationRules.domination(E, phi, pairs, tol)
    upper.merge(lower)
    upper.metrics["lower_violations"] = float(lower.violation_count)
    upper.notes.append(f"phi={phi.name}, pairs={len(pairs)}")
    return _log(upper, E)


def check_translation(
    E: FExpectationOperator,
    claims: Optional[Sequence[AdaptedField]] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """Translation invariance: E[X+Y|F_t] = E[X|F_t] + Y for constants and B_t shifts."""
    tol = settings.EXACT_TOL if tol is None else tol
    claims = default_claims(E.tree) if claims is None else list(claims)
    return _log(DominationRules.translation(E, claims, tol), E)


def check_consequences(
    E: FExpectationOperator,
    phi: Optional[Modulus] = None,
    claims: Optional[Sequence[AdaptedField]] = None,
    tol: Optional[float] = None,
) -> List[CheckReport]:
    """Sandwich, absolute-difference and continuity consequences of domination."""
    tol = settings.CHAIN_TOL if tol is None else tol
    phi = E.modulus if phi is None else phi
    claims = default_claims(E.tree) if claims is None else list(claims)
    reports = [
        DominationRules.sandwich(E, phi, claims, tol),
        DominationRules.abs_difference(E, phi, all_pairs(claims), tol),
        DominationRules.continuity(E, claims, noise_claim(E.tree)),
    ]
    return [_log(r, E) for r in reports]


def check_boundedness(
    E: FExpectationOperator,
    phi: Optional[Modulus] = None,
    claims: Optional[Sequence[AdaptedField]] = None,
    z=1.0,
    tol: Optional[float] = None,
) -> CheckReport:
    """Shifted value E[X + zB_T|F_t] - zB_t stays inside the barrier BSDEs for bounded X."""
    tol = settings.CHAIN_TOL if tol is None else tol
    phi = E.modulus if phi is None else phi
    if claims is None:
        claims = default_claims(E.tree, keys=("const", "indicator_up", "indicator_first_up"))
    z = np.broadcast_to(np.asarray(z, dtype=float), (E.tree.d,))
    return _log(DominationRules.barrier_bounds(E, phi, claims, z, tol), E)


def run_domination_suite(
    E: FExpectationOperator,
    phi: Optional[Modulus] = None,
    claims: Optional[Sequence[AdaptedField]] = None,
) -> List[CheckReport]:
    """Domination, then translation on the same operator, then the consequences."""
    claims = default_claims(E.tree) if claims is None else list(claims)
    reports = [check_domination(E, phi, all_pairs(claims)), check_translation(E, claims)]
    reports += check_consequences(E, phi, claims)
    return reports


# ==================== STOPPING ====================

def check_supermartingale(
    E: FExpectationOperator, Y: AdaptedField, kind: str = "super", tol: Optional[float] = None
) -> CheckReport:
    """One-step E-super/sub/martingale check at every node."""
    if kind not in KINDS:
        raise ContractError(f"kind must be one of {KINDS}, got {kind!r}")
    if not Y.is_process:
        raise ContractError("martingale checks need a process defined at every step")
    tol = settings.CHAIN_TOL if tol is None else tol
    return StoppingRules.one_step(E, Y, kind, tol)


def optional_stopping_check(
    E: FExpectationOperator,
    Y: AdaptedField,
    sigma: StoppingTime,
    tau: StoppingTime,
    kind: str = "super",
    tol: Optional[float] = None,
) -> CheckReport:
    """E[Y_tau|F_sigma] <= Y_{sigma ^ tau} for an E-supermartingale Y."""
    tol = settings.CHAIN_TOL if tol is None else tol
    preflight = check_supermartingale(E, Y, kind, tol)
    if not preflight.passed:
        w = preflight.witnesses[0]
        name = "E-martingale" if kind == "martingale" else f"E-{kind}martingale"
        raise ContractError(
            f"process is not an {name}: step={w.step}, node={w.node}, "
            f"E-step={w.lhs:.6g} vs Y={w.rhs:.6g}"
        )
    return _log(StoppingRules.optional_stopping(E, Y, sigma, tau, kind, tol), E)


def locality_check(
    E: FExpectationOperator,
    sigma: StoppingTime,
    X: AdaptedField,
    Y: AdaptedField,
    A: Event,
    tol: Optional[float] = None,
) -> CheckReport:
    """Locality on an F_sigma-event A, and translation by F_sigma-measurable Y."""
    tol = settings.CHAIN_TOL if tol is None else tol
    if not sigma.is_measurable_at(A.leaf_mask.astype(float)):
        raise ContractError(f"event {A.label} is not F_sigma-measurable for sigma={sigma.label}")
    return _log(StoppingRules.locality(E, sigma, X, Y, A, tol), E)
