"""
Stopping Rules - supermartingale one-step checks, optional stopping and
locality at stopping times.

Conditional values at a stopping time sigma are read leafwise from the
operator's process: E[X|F_sigma] = E[X|F_k] on {sigma = k}.
"""

import numpy as np

from ...lattice import AdaptedField, Event, StoppingTime, stopped_value
from ...schemas import CheckReport, Witness
from ..operators import FExpectationOperator

KINDS = ("super", "sub", "martingale")


class StoppingRules:
    """Leafwise inequalities at stopping times"""

    @staticmethod
    def one_step(E: FExpectationOperator, Y: AdaptedField, kind: str, tol: float) -> CheckReport:
        """E[Y_{k+1}|F_k] <= Y_k (super), >= (sub) or both (martingale)."""
        report = CheckReport(check=f"{kind}martingale" if kind != "martingale" else "martingale")
        for k in range(E.tree.N):
            value = E.step(Y.at(k + 1), k)
            if kind in ("super", "martingale"):
                report.compare_le(value, Y.at(k), tol, step=k, detail="E[Y_{k+1}|F_k] <= Y_k")
            if kind in ("sub", "martingale"):
                report.compare_le(Y.at(k), value, tol, step=k, detail="E[Y_{k+1}|F_k] >= Y_k")
        return report

    @staticmethod
    def optional_stopping(
        E: FExpectationOperator, Y: AdaptedField, sigma: StoppingTime, tau: StoppingTime,
        kind: str, tol: float,
    ) -> CheckReport:
        """E[Y_tau|F_sigma] <= Y_{sigma ^ tau} leafwise (>= for sub, both for martingale)."""
        stopped = stopped_value(Y, tau)
        lhs = stopped_value(E.process(stopped, use_cache=False), sigma).terminal
        rhs = stopped_value(Y, sigma.minimum(tau)).terminal
        report = CheckReport(check=f"optional_stopping:{kind}")
        detail = f"sigma={sigma.label}, tau={tau.label}"
        if kind in ("super", "martingale"):
            _leafwise(report, lhs, rhs, tol, sigma, detail)
        if kind in ("sub", "martingale"):
            _leafwise(report, rhs, lhs, tol, sigma, detail)
        return report

    @staticmethod
    def locality(
        E: FExpectationOperator, sigma: StoppingTime, X: AdaptedField, Y: AdaptedField, A: Event, tol: float
    ) -> CheckReport:
        """1_A E[X+Y|F_sigma] = 1_A E[1_A X + Y|F_sigma]; plus translation when Y is F_sigma-measurable."""
        mask = A.leaf_mask.astype(float)
        report = CheckReport(check="locality")
        joint = stopped_value(E.process(X + Y, use_cache=False), sigma).terminal
        local = stopped_value(E.process(X * A.indicator() + Y, use_cache=False), sigma).terminal
        _leafwise(report, mask * joint, mask * local, tol, sigma, f"on {A.label}", equal=True)

        if sigma.is_measurable_at(Y.terminal):
            alone = stopped_value(E.process(X, use_cache=False), sigma).terminal
            _leafwise(report, joint, alone + Y.terminal, tol, sigma, f"shift by {Y.label}", equal=True)
        else:
            report.notes.append(f"{Y.label} is not F_sigma-measurable; translation form skipped")
        return report


def _leafwise(
    report: CheckReport, lhs: np.ndarray, rhs: np.ndarray, tol: float, sigma: StoppingTime,
    detail: str, equal: bool = False,
) -> None:
    bad = ~(np.abs(lhs - rhs) <= tol) if equal else ~(lhs <= rhs + tol)
    for leaf in np.flatnonzero(bad):
        report.add_witness(Witness(step=int(sigma.leaf_steps[leaf]), node=int(leaf),
                                   lhs=float(lhs[leaf]), rhs=float(rhs[leaf]), detail=f"leaf; {detail}"))

