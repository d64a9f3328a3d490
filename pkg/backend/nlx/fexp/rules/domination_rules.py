"""
Domination Rules - domination, translation invariance and their consequences, checked nodewise.

E^{phi} and E^{-phi} are the g-expectations with drivers +-phi(|z|) on the
same tree as the operator under test.
"""

from typing import Sequence, Tuple

import numpy as np

from ...bsde.solver import solve_bsde
from ...concurrency import parallel_map
from ...generators import Modulus, custom, znorm
from ...lattice import AdaptedField
from ...schemas import CheckReport, Witness
from ..corpus import shift_claims
from ..operators import FExpectationOperator, phi_expectation
from .axiom_rules import _merge

Pair = Tuple[AdaptedField, AdaptedField]


class DominationRules:
    """Nodewise inequalities tying an operator to E^{+-phi}"""

    @staticmethod
    def domination(E: FExpectationOperator, phi: Modulus, pairs: Sequence[Pair], tol: float) -> Tuple[CheckReport, CheckReport]:
        """Upper form E[X]-E[Y] <= E^phi[X-Y] and lower form E^{-phi}[X-Y] <= E[X]-E[Y]."""
        upper_op = phi_expectation(phi, E.tree, +1)
        lower_op = phi_expectation(phi, E.tree, -1)

        def one(pair) -> Tuple[CheckReport, CheckReport]:
            x, y = pair
            upper = CheckReport(check="domination")
            lower = CheckReport(check="domination_lower")
            px, py = E.process(x), E.process(y)
            diff = x - y
            bound_hi = upper_op.process(diff, use_cache=False)
            bound_lo = lower_op.process(diff, use_cache=False)
            for t in range(E.tree.N + 1):
                d = px.at(t) - py.at(t)
                upper.compare_le(d, bound_hi.at(t), tol, step=t, detail=f"({x.label}, {y.label})")
                lower.compare_le(bound_lo.at(t), d, tol, step=t, detail=f"({x.label}, {y.label})")
            return upper, lower

        results = parallel_map(one, pairs)
        return _merge("domination", [r[0] for r in results]), _merge("domination_lower", [r[1] for r in results])

    @staticmethod
    def translation(E: FExpectationOperator, claims: Sequence[AdaptedField], tol: float) -> CheckReport:
        """E[X+Y|F_t] = E[X|F_t] + Y for F_t-measurable Y"""
        tree = E.tree

        def one(x) -> CheckReport:
            report = CheckReport(check="translation")
            base = E.process(x)
            for t in range(tree.N + 1):
                for shift in shift_claims(tree, t):
                    shifted = E.process(x + shift, use_cache=False)
                    report.compare_eq(shifted.at(t), base.at(t) + shift.terminal[:: tree.block(t)], tol,
                                      step=t, detail=f"{x.label} + {shift.label}")
            return report

        return _merge("translation", parallel_map(one, claims))

    @staticmethod
    def sandwich(E: FExpectationOperator, phi: Modulus, claims: Sequence[AdaptedField], tol: float) -> CheckReport:
        """E^{-phi}[X] <= E[X] <= E^{phi}[X]"""
        upper_op = phi_expectation(phi, E.tree, +1)
        lower_op = phi_expectation(phi, E.tree, -1)

        def one(x) -> CheckReport:
            report = CheckReport(check="sandwich")
            mid, hi, lo = E.process(x), upper_op.process(x), lower_op.process(x)
            for t in range(E.tree.N + 1):
                report.compare_le(mid.at(t), hi.at(t), tol, step=t, detail=f"{x.label} upper")
                report.compare_le(lo.at(t), mid.at(t), tol, step=t, detail=f"{x.label} lower")
            return report

        return _merge("sandwich", parallel_map(one, claims))

    @staticmethod
    def abs_difference(E: FExpectationOperator, phi: Modulus, pairs: Sequence[Pair], tol: float) -> CheckReport:
        """|E[X] - E[Y]| <= E^{phi}[|X - Y|]"""
        upper_op = phi_expectation(phi, E.tree, +1)

        def one(pair) -> CheckReport:
            x, y = pair
            report = CheckReport(check="abs_difference")
            px, py = E.process(x), E.process(y)
            bound = upper_op.process((x - y).map(np.abs), use_cache=False)
            for t in range(E.tree.N + 1):
                report.compare_le(np.abs(px.at(t) - py.at(t)), bound.at(t), tol, step=t,
                                  detail=f"({x.label}, {y.label})")
            return report

        return _merge("abs_difference", parallel_map(one, pairs))

    @staticmethod
    def continuity(
        E: FExpectationOperator,
        claims: Sequence[AdaptedField],
        noise: AdaptedField,
        levels: Sequence[int] = (1, 2, 4, 8, 16, 32),
    ) -> CheckReport:
        """max-node error of E[X + noise/n] against E[X] shrinks as n grows."""
        report = CheckReport(check="continuity")
        for x in claims:
            base = E.process(x)
            errors = []
            for n in levels:
                perturbed = E.process(x + noise * (1.0 / n), use_cache=False)
                errors.append(perturbed.max_abs_diff(base))
            for n, err in zip(levels, errors):
                report.metrics[f"{x.label}:n={n}"] = err
            if errors[0] > 0 and not errors[-1] < errors[0]:
                report.add_witness(Witness(lhs=errors[-1], rhs=errors[0],
                                           detail=f"{x.label}: error did not shrink"))
        return report

    @staticmethod
    def barrier_bounds(
        E: FExpectationOperator, phi: Modulus, claims: Sequence[AdaptedField], z, tol: float
    ) -> CheckReport:
        """Shifted value E[X + zB_T|F_t] - zB_t lies between the two barrier BSDEs."""
        tree = E.tree
        shift = float(phi(znorm(np.atleast_2d(np.asarray(z, dtype=float))))[0])
        upper_g = custom(lambda t, y, zz: phi(znorm(zz)) + shift, phi, zero_at_zero=False,
                         name="phi(|Z|)+phi(|z|)")
        lower_g = upper_g.negated()
        linear = AdaptedField.claim(tree, tree.linear_brownian(z, tree.N), "zB_T")

        report = CheckReport(check="barrier_bounds")
        sup_value, sup_bound = 0.0, 0.0
        for x in claims:
            value = E.process(x + linear, use_cache=False)
            upper = solve_bsde(upper_g, x).Y
            lower = solve_bsde(lower_g, x).Y
            for t in range(tree.N + 1):
                shifted = value.at(t) - tree.linear_brownian(z, t)
                report.compare_le(shifted, upper.at(t), tol, step=t, detail=f"{x.label} upper barrier")
                report.compare_le(lower.at(t), shifted, tol, step=t, detail=f"{x.label} lower barrier")
                sup_value = max(sup_value, float(np.max(np.abs(shifted))))
                sup_bound = max(sup_bound, float(np.max(np.abs(upper.at(t)))),
                                float(np.max(np.abs(lower.at(t)))))
        report.metrics.update({"sup_shifted_value": sup_value, "sup_barrier": sup_bound})
        return report

