"""
Unit Tests for Domination, Translation and Their Consequences
"""

import pytest

from nlx.fexp import (
    CLAIM_BUILDERS,
    check_boundedness,
    check_consequences,
    check_domination,
    check_translation,
    classical,
    default_claims,
    from_generator,
    run_domination_suite,
    user_defined,
)
from nlx.generators import linear_modulus, mu_abs_z, sqrt_modulus, sqrt_norm
from nlx.lattice import AdaptedField


def scaled_classical(tree, factor=1.1):
    """factor * classical expectation; breaks translation invariance."""
    base = classical(tree)

    def evaluator(xi, t):
        return factor * base.process(xi, use_cache=False).at(t)

    return user_defined(tree, evaluator, linear_modulus(1.0), name="scaled")


class TestDomination:
    """Domination in its upper and lower forms"""

    def test_equal_claims(self, drift8, tree8):
        """X = Y gives 0 <= E^phi[0] = 0"""
        xi = CLAIM_BUILDERS["B_T"](tree8)
        assert check_domination(drift8, pairs=[(xi, xi)]).passed

    def test_linear_generator_dominated(self, tree8):
        """E^{0.1|z|} is dominated by phi(x) = 0.1 x"""
        E = from_generator(mu_abs_z(0.1), tree8)
        b, a = CLAIM_BUILDERS["B_T"](tree8), CLAIM_BUILDERS["abs_B_T"](tree8)
        zero = AdaptedField.constant(tree8, 0.0)
        report = check_domination(E, linear_modulus(0.1), pairs=[(b, zero), (a, b)])
        assert report.passed
        assert report.metrics["lower_violations"] == 0.0

    def test_modulus_too_small(self, tree8):
        """E^{0.2|z|} is not dominated by phi(x) = 0.1 x"""
        E = from_generator(mu_abs_z(0.2), tree8)
        b = CLAIM_BUILDERS["B_T"](tree8)
        zero = AdaptedField.constant(tree8, 0.0)
        report = check_domination(E, linear_modulus(0.1), pairs=[(b, zero)])
        assert not report.passed
        assert report.witnesses[0].lhs > report.witnesses[0].rhs

    def test_sqrt_generator_dominated(self, tree8):
        """E^{sqrt|z|} is dominated by sqrt on every default pair"""
        E = from_generator(sqrt_norm(), tree8)
        assert check_domination(E, sqrt_modulus()).passed

    def test_linear_generator_default_pairs(self, tree8):
        """E^{0.1|z|} is dominated by its own modulus on every default pair"""
        assert check_domination(from_generator(mu_abs_z(0.1), tree8)).passed

    def test_default_pairs(self, drift8):
        """Drift uncertainty passes on every default pair"""
        assert check_domination(drift8).passed


class TestTranslation:
    """Translation invariance for constants and B_t shifts"""

    def test_drift_uncertainty(self, drift8):
        """Drift uncertainty is translation invariant"""
        assert check_translation(drift8).passed

    def test_generator(self, tree8):
        """E^{sqrt|z|} is translation invariant on the default corpus"""
        assert check_translation(from_generator(sqrt_norm(), tree8)).passed

    def test_scaled_operator_witnessed(self, tree4):
        """1.1 * E fails E[X + c] = E[X] + c"""
        report = check_translation(scaled_classical(tree4),
                                   default_claims(tree4, keys=("const", "B_T")))
        assert not report.passed
        assert report.violation_count > 0


class TestConsequences:
    """Sandwich, absolute difference, continuity and boundedness"""

    def test_consequences_pass(self, drift8):
        """Every consequence of domination holds for drift uncertainty"""
        reports = check_consequences(drift8)
        assert [r.check for r in reports] == ["sandwich", "abs_difference", "continuity"]
        assert all(r.passed for r in reports)

    def test_continuity_errors_shrink(self, drift8, tree8):
        """The perturbation error decreases along 1/n"""
        xi = CLAIM_BUILDERS["B_T"](tree8)
        continuity = check_consequences(drift8, claims=[xi])[2]
        errors = [continuity.metrics[f"{xi.label}:n={n}"] for n in (1, 2, 4, 8, 16, 32)]
        assert errors[-1] < errors[0]
        assert errors[-1] <= 1.5 / 32

    def test_boundedness(self, drift8):
        """Bounded claims stay inside the barrier BSDEs"""
        report = check_boundedness(drift8)
        assert report.passed
        assert report.metrics["sup_shifted_value"] <= report.metrics["sup_barrier"]

    def test_suite(self, drift8, tree8):
        """Domination, translation and the consequences all pass together"""
        reports = run_domination_suite(drift8, claims=default_claims(tree8))
        assert reports[0].check == "domination"
        assert reports[1].check == "translation"
        assert all(r.passed for r in reports)
