"""
Axiom Rules - nodewise checks of the four F-expectation axioms.

Every rule returns a CheckReport; nothing here raises on a failed property.
"""

from typing import Sequence, Tuple

from ...concurrency import parallel_map
from ...lattice import AdaptedField, Event
from ...schemas import CheckReport
from ..operators import FExpectationOperator


class AxiomRules:
    """Monotonicity, constant preservation, consistency and the 0-1 law"""

    @staticmethod
    def monotonicity(
        E: FExpectationOperator, pairs: Sequence[Tuple[AdaptedField, AdaptedField]], tol: float
    ) -> CheckReport:
        """X >= Y  =>  E[X|F_t] >= E[Y|F_t]"""

        def one(pair) -> CheckReport:
            x, y = pair
            report = CheckReport(check="monotonicity")
            px, py = E.process(x), E.process(y)
            for t in range(E.tree.N + 1):
                report.compare_le(py.at(t), px.at(t), tol, step=t, detail=f"{y.label} <= {x.label}")
            return report

        return _merge("monotonicity", parallel_map(one, pairs))

    @staticmethod
    def constant_preservation(
        E: FExpectationOperator, measurable: Sequence[Tuple[int, AdaptedField]], tol: float
    ) -> CheckReport:
        """xi in F_k  =>  E[xi|F_t] = xi for every t >= k"""

        def one(item) -> CheckReport:
            k, xi = item
            report = CheckReport(check="constant_preservation")
            values = E.process(xi, use_cache=False)
            for t in range(k, E.tree.N + 1):
                expected = xi.terminal[:: E.tree.block(t)]
                report.compare_eq(values.at(t), expected, tol, step=t, detail=xi.label)
            return report

        return _merge("constant_preservation", parallel_map(one, measurable))

    @staticmethod
    def consistency(E: FExpectationOperator, claims: Sequence[AdaptedField], tol: float) -> CheckReport:
        """E[E[xi|F_t]|F_s] = E[xi|F_s] for s <= t"""

        def one(xi) -> CheckReport:
            report = CheckReport(check="consistency")
            outer = E.process(xi)
            for t in range(1, E.tree.N):
                inner = E.process(outer.as_claim(t), use_cache=False)
                for s in range(t + 1):
                    report.compare_eq(inner.at(s), outer.at(s), tol, step=s,
                                      detail=f"{xi.label} via t={t}")
            return report

        return _merge("consistency", parallel_map(one, claims))

    @staticmethod
    def zero_one_law(
        E: FExpectationOperator, claims: Sequence[AdaptedField], events: Sequence[Event], tol: float
    ) -> CheckReport:
        """E[1_A xi|F_t] = 1_A E[xi|F_t] for A in F_t"""
        jobs = [(xi, event) for event in events for xi in claims]

        def one(job) -> CheckReport:
            xi, event = job
            report = CheckReport(check="zero_one_law")
            base = E.process(xi)
            masked = E.process(xi * event.indicator(), use_cache=False)
            for t in range(event.step, E.tree.N + 1):
                indicator = event.node_mask(t).astype(float)
                report.compare_eq(masked.at(t), indicator * base.at(t), tol, step=t,
                                  detail=f"{xi.label} on {event.label}")
            return report

        return _merge("zero_one_law", parallel_map(one, jobs))


def _merge(name: str, reports: Sequence[CheckReport]) -> CheckReport:
    merged = CheckReport(check=name)
    for report in reports:
        merged.merge(report)
    merged.metrics["cases"] = float(len(reports))
    return merged
