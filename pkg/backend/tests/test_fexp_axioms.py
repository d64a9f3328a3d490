"""
Unit Tests for F-Expectation Operators and Axiom Checks

Operator construction, the four axioms on the default corpus, and the
stopping-time checks.
"""

import numpy as np
import pytest

from nlx.bsde import explicit_step
from nlx.errors import ContractError
from nlx.fexp import (
    CLAIM_BUILDERS,
    Provenance,
    check_axioms,
    check_supermartingale,
    classical,
    default_claims,
    drift_uncertainty,
    from_generator,
    locality_check,
    make_operator,
    optional_stopping_check,
    user_defined,
)
from nlx.fexp.corpus import brownian_at, ordered_pairs
from nlx.generators import affine_y, mu_abs_z, sqrt_norm, zero, zero_modulus
from nlx.lattice import AdaptedField, Event, StoppingTime


def structured_claims(tree):
    return default_claims(tree, keys=("const", "B_T", "abs_B_T", "B_T_sq"))


def shifted_classical(tree):
    """Classical expectation plus dt at every step; breaks constant preservation."""
    base = classical(tree)

    def evaluator(xi, t):
        return base.process(xi, use_cache=False).at(t) + tree.dt

    return user_defined(tree, evaluator, zero_modulus(), name="shifted")


class TestOperators:
    """Construction and provenance"""

    def test_zero_generator_is_classical(self, tree8, claims8):
        """E^0 equals the classical expectation nodewise"""
        E0 = from_generator(zero(), tree8)
        C = classical(tree8)
        for xi in claims8:
            assert E0.process(xi).max_abs_diff(C.process(xi)) <= 1e-12

    def test_drift_uncertainty_matches_generator(self, tree10):
        """drift_uncertainty(mu) = E^{mu|z|} on the full tree"""
        du = drift_uncertainty(0.1, tree10)
        eg = from_generator(mu_abs_z(0.1), tree10)
        for xi in default_claims(tree10):
            assert du.process(xi).max_abs_diff(eg.process(xi)) <= 1e-12

    def test_drift_uncertainty_one_step(self, drift8, tree8):
        """E[z (B_1 - B_0)] = mu |z| dt"""
        values = 2.0 * tree8.brownian_at(1)[:, 0]
        assert drift8.step(values, 0)[0] == pytest.approx(0.1 * 2.0 * tree8.dt, abs=1e-14)

    def test_zero_mu_is_classical(self, tree8, claims8):
        """mu = 0 reduces to the classical expectation"""
        du = drift_uncertainty(0.0, tree8)
        for xi in claims8:
            assert du.process(xi).max_abs_diff(classical(tree8).process(xi)) <= 1e-12

    def test_weight_constraint(self, tree4):
        """mu sqrt(d dt) > 1 is rejected with a suggested N"""
        with pytest.raises(ContractError, match="use N >="):
            drift_uncertainty(10.0, tree4)

    def test_generator_nonzero_at_origin(self, tree8):
        """g(t, y, 0) != 0 cannot define an F-expectation"""
        with pytest.raises(ContractError):
            from_generator(affine_y(0.5), tree8)

    def test_make_operator(self, tree8):
        """Config keys map to provenance tags"""
        assert make_operator("classical", tree8).provenance == Provenance.CLASSICAL
        assert make_operator("drift_uncertainty", tree8, mu=0.1).provenance == Provenance.DRIFT_UNCERTAINTY
        with pytest.raises(ContractError):
            make_operator("from_generator", tree8)
        with pytest.raises(ContractError):
            make_operator("quantile", tree8)

    def test_process_is_cached(self, drift8, tree8):
        """The same claim object reuses one sweep"""
        xi = CLAIM_BUILDERS["B_T"](tree8)
        assert drift8.process(xi) is drift8.process(xi)

    def test_user_defined_shape_checked(self, tree4):
        """An evaluator returning the wrong shape raises"""
        E = user_defined(tree4, lambda xi, t: np.zeros(3), zero_modulus())
        with pytest.raises(ContractError):
            E.value(AdaptedField.constant(tree4, 1.0))


class TestAxioms:
    """check_axioms on the default and structured corpora"""

    def test_classical_passes(self, classical8):
        """The classical expectation satisfies every axiom"""
        assert check_axioms(classical8).passed

    def test_sqrt_generator_passes(self, tree8):
        """E^{sqrt|z|} passes on the full default corpus"""
        E = from_generator(sqrt_norm(), tree8)
        report = check_axioms(E)
        assert report.passed, [r.check for r in report.reports() if not r.passed]

    def test_linear_generator_passes(self, tree8):
        """E^{0.1|z|} passes on the full default corpus"""
        report = check_axioms(from_generator(mu_abs_z(0.1), tree8))
        assert report.passed, [r.check for r in report.reports() if not r.passed]

    def test_sqrt_step_monotone_near_zero(self, tree8):
        """Raising the low child near Z = 0 lowers the raw sqrt step but not the operator's"""
        E = from_generator(sqrt_norm(), tree8)
        low, high = np.array([1e-4, 0.0]), np.array([1e-4, 5e-5])
        raw_low = explicit_step(tree8, sqrt_norm(), low, 0)[0]
        raw_high = explicit_step(tree8, sqrt_norm(), high, 0)[0]
        assert raw_high[0] < raw_low[0]
        assert E.step(high, 0)[0] >= E.step(low, 0)[0] - 1e-15

    def test_sqrt_envelope(self, tree8):
        """The step driver is min(|z| / sqrt(dt), sqrt|z|): sqrt above dt, linear below"""
        g = from_generator(sqrt_norm(), tree8).step_generator
        z = np.array([[0.0], [0.01], [0.125], [0.5], [4.0]])
        expected = np.minimum(np.abs(z[:, 0]) / np.sqrt(tree8.dt), np.sqrt(np.abs(z[:, 0])))
        assert np.allclose(g(0.0, np.zeros(5), z), expected, atol=1e-15)
        assert g(0.0, np.zeros(5), z)[3] == pytest.approx(np.sqrt(0.5))

    def test_linear_generator_unchanged(self, tree8):
        """0.1|z| is already flat enough on N = 8"""
        g = from_generator(mu_abs_z(0.1), tree8).step_generator
        z = np.array([[-3.0], [0.2]])
        assert np.allclose(g(0.0, np.zeros(2), z), [0.3, 0.02], atol=1e-15)

    def test_drift_uncertainty_passes(self, drift8):
        """Drift uncertainty passes on the full default corpus"""
        assert check_axioms(drift8).passed

    def test_shifted_operator_witnessed(self, tree8):
        """Adding dt everywhere breaks constant preservation"""
        report = check_axioms(shifted_classical(tree8), structured_claims(tree8))
        assert not report.constant_preservation.passed
        assert report.constant_preservation.witnesses[0].step is not None

    def test_empty_corpus_rejected(self, classical8):
        """Axiom checks need claims"""
        with pytest.raises(ContractError):
            check_axioms(classical8, claims=[])

    def test_ordered_pairs(self, tree8):
        """Pairs are ordered leafwise and include the unit shifts"""
        claims = structured_claims(tree8)
        for x, y in ordered_pairs(claims):
            assert np.all(x.terminal >= y.terminal)


class TestStopping:
    """Supermartingales, optional stopping and locality"""

    def _obstacle(self, E, tree, c=0.05):
        base = E.process(CLAIM_BUILDERS["abs_B_T"](tree))
        return AdaptedField.process(
            tree, [base.at(k) - c * tree.time(k) for k in range(tree.N + 1)], "Y")

    def test_supermartingale(self, tree8):
        """E^g[|B_T||F_k] - c t_k is an E-supermartingale"""
        E = from_generator(mu_abs_z(0.1), tree8)
        assert check_supermartingale(E, self._obstacle(E, tree8)).passed

    def test_unknown_kind(self, tree8, classical8):
        """Only super, sub and martingale are known"""
        with pytest.raises(ContractError):
            check_supermartingale(classical8, tree8.brownian.map(lambda v: v[:, 0]), "quasi")

    def test_optional_stopping_deterministic(self, tree8):
        """sigma = tau = t reduces to the supermartingale property"""
        E = from_generator(mu_abs_z(0.1), tree8)
        t = StoppingTime.deterministic(tree8, 3)
        assert optional_stopping_check(E, self._obstacle(E, tree8), t, t).passed

    def test_optional_stopping_hitting_time(self, tree8):
        """Stopping at an upper barrier keeps the inequality"""
        E = from_generator(mu_abs_z(0.1), tree8)
        tau = StoppingTime.hitting_time(tree8.brownian.map(lambda v: v[:, 0]), 0.5)
        sigma = StoppingTime.deterministic(tree8, 2)
        assert optional_stopping_check(E, self._obstacle(E, tree8), sigma, tau).passed

    def test_optional_stopping_martingale(self, tree8):
        """An E-martingale satisfies both inequalities"""
        E = from_generator(sqrt_norm(), tree8)
        Y = E.process(CLAIM_BUILDERS["B_T"](tree8))
        tau = StoppingTime.hitting_time(tree8.brownian.map(lambda v: v[:, 0]), 0.5)
        sigma = StoppingTime.deterministic(tree8, 1)
        assert optional_stopping_check(E, Y, sigma, tau, kind="martingale").passed

    def test_optional_stopping_precondition(self, tree8, classical8):
        """A submartingale input raises with the violating node"""
        Y = AdaptedField.process(
            tree8, [np.full(tree8.node_count(k), tree8.time(k)) for k in range(tree8.N + 1)])
        t = StoppingTime.deterministic(tree8, 4)
        with pytest.raises(ContractError, match="step="):
            optional_stopping_check(classical8, Y, t, t)

    def test_locality(self, tree8):
        """Locality on {eps_1 = +1} with sigma = 1 and the B_1 shift"""
        E = from_generator(mu_abs_z(0.1), tree8)
        sigma = StoppingTime.deterministic(tree8, 1)
        A = Event.at_step(tree8, 1, [False, True], "up")
        X = CLAIM_BUILDERS["abs_B_T"](tree8)
        report = locality_check(E, sigma, X, brownian_at(tree8, 1), A)
        assert report.passed
        assert not report.notes

    def test_locality_whole_space(self, tree8, drift8):
        """A = Omega is a tautology"""
        sigma = StoppingTime.deterministic(tree8, 2)
        X = CLAIM_BUILDERS["B_T_sq"](tree8)
        assert locality_check(drift8, sigma, X, brownian_at(tree8, 2), Event.whole(tree8)).passed

    def test_locality_event_not_measurable(self, tree8, drift8):
        """A must be F_sigma-measurable"""
        sigma = StoppingTime.deterministic(tree8, 1)
        A = Event.at_step(tree8, 2, [True, False, False, False])
        with pytest.raises(ContractError):
            locality_check(drift8, sigma, CLAIM_BUILDERS["B_T"](tree8), brownian_at(tree8, 1), A)
