"""
Unit Tests for the Discrete BSDE Solver

Hand-computed values on small trees, scheme conventions, representation
extraction and the comparison/symmetry checks.
"""

import numpy as np
import pytest

from nlx.bsde import (
    Scheme,
    comparison_check,
    extract_representation,
    g_expectation,
    representation_gap_check,
    scheme_gap,
    solve_bsde,
    symmetry_check,
)
from nlx.errors import ContractError, UnsupportedError
from nlx.fexp import CLAIM_BUILDERS, default_claims
from nlx.generators import affine_y, linear_modulus, mu_abs_z, sqrt_norm, zero
from nlx.lattice import AdaptedField, build_tree


@pytest.fixture
def tree2():
    """T = 1, N = 2, d = 1"""
    return build_tree(1.0, d=1, steps=2)


class TestSolveBsde:
    """Backward recursion values"""

    def test_zero_driver_variance(self, tree2):
        """g = 0 and B_T^2 give Y_0 = T"""
        xi = CLAIM_BUILDERS["B_T_sq"](tree2)
        assert solve_bsde(zero(), xi).y0 == pytest.approx(1.0, abs=1e-12)

    def test_linear_drift_value(self, tree2):
        """g = 0.1|z| and B_T give Y_0 = 0.1 with Z = 1"""
        solution = solve_bsde(mu_abs_z(0.1), CLAIM_BUILDERS["B_T"](tree2))
        assert solution.y0 == pytest.approx(0.1, abs=1e-12)
        for k in range(tree2.N):
            assert np.allclose(solution.Z.at(k), 1.0, atol=1e-12)

    def test_sqrt_driver_value(self, tree8):
        """g = sqrt|z| and B_T give Y_0 = N dt = T"""
        solution = solve_bsde(sqrt_norm(), CLAIM_BUILDERS["B_T"](tree8))
        assert solution.y0 == pytest.approx(1.0, abs=1e-12)

    def test_step_one_slice(self, tree2):
        """E^g[B_T|F_1] = sqrt(0.5) eps_1 + 0.05"""
        value = g_expectation(mu_abs_z(0.1), CLAIM_BUILDERS["B_T"](tree2), 1).at(1)
        s = np.sqrt(0.5)
        assert np.allclose(value, [-s + 0.05, s + 0.05], atol=1e-12)

    def test_terminal_slice(self, tree2):
        """E^g[xi|F_N] = xi"""
        xi = CLAIM_BUILDERS["B_T"](tree2)
        assert np.array_equal(g_expectation(mu_abs_z(0.1), xi, 2).at(2), xi.terminal)

    def test_constant_preservation(self, tree8):
        """A step-3 measurable claim is returned unchanged from step 3 on"""
        xi = CLAIM_BUILDERS["B_T"](tree8)
        measurable = solve_bsde(zero(), xi).Y.as_claim(3)
        value = g_expectation(mu_abs_z(0.3), measurable, 3).at(3)
        assert np.allclose(value, measurable.terminal[:: tree8.block(3)], atol=1e-12)

    def test_dynamics_residual(self, tree8):
        """Both schemes satisfy their own one-step equation"""
        xi = CLAIM_BUILDERS["abs_B_T"](tree8)
        for scheme in (Scheme.EXPLICIT, Scheme.IMPLICIT):
            solution = solve_bsde(affine_y(0.5, 0.2), xi, scheme=scheme)
            assert solution.residual() <= 1e-12

    def test_implicit_needs_contraction(self, tree2):
        """K dt >= 1 is rejected for the implicit scheme"""
        with pytest.raises(ContractError):
            solve_bsde(affine_y(4.0), CLAIM_BUILDERS["B_T"](tree2), scheme="implicit")

    def test_foreign_tree(self, tree2, tree8):
        """The claim must live on the solver's tree"""
        with pytest.raises(ContractError):
            solve_bsde(zero(), CLAIM_BUILDERS["B_T"](tree2), tree8)

    def test_json_meta(self, tree2):
        """Serialized solutions carry the tree shape and scheme"""
        data = solve_bsde(zero(), CLAIM_BUILDERS["B_T"](tree2)).to_json()
        assert data["meta"] == {"T": 1.0, "N": 2, "d": 1, "scheme": "explicit", "generator": "zero"}
        assert sorted(data["Z"]) == ["0", "1"]


class TestRepresentation:
    """Drift and integrand extraction"""

    def test_linear_martingale(self, tree8):
        """A classical martingale has zero drift"""
        y = solve_bsde(zero(), CLAIM_BUILDERS["abs_B_T"](tree8)).Y
        rep = extract_representation(y, linear_modulus(0.1))
        assert rep.report.passed
        assert rep.report.metrics["max_abs_g"] <= 1e-12

    def test_g_expectation_drift(self, tree8):
        """E^{0.1|z|}[B_T|F_k] has drift 0.1 and Z = 1; the bound is tight"""
        y = solve_bsde(mu_abs_z(0.1), CLAIM_BUILDERS["B_T"](tree8)).Y
        rep = extract_representation(y, linear_modulus(0.1))
        assert rep.report.passed
        for k in range(tree8.N):
            assert np.allclose(rep.g.at(k), 0.1, atol=1e-10)
            assert np.allclose(rep.Z.at(k), 1.0, atol=1e-10)

    def test_gap_between_representations(self, tree8):
        """|gX - gY| <= phi(|ZX - ZY|) for two E^g-martingales"""
        g = mu_abs_z(0.1)
        rep_x = extract_representation(solve_bsde(g, CLAIM_BUILDERS["B_T"](tree8)).Y, g.modulus)
        rep_y = extract_representation(solve_bsde(g, CLAIM_BUILDERS["abs_B_T"](tree8)).Y, g.modulus)
        assert representation_gap_check(rep_x, rep_y, g.modulus).passed

    def test_two_dimensions_unsupported(self, tree2d):
        """No exact representation on the 4-ary tree"""
        y = solve_bsde(zero(), CLAIM_BUILDERS["B_T"](tree2d)).Y
        with pytest.raises(UnsupportedError):
            extract_representation(y, linear_modulus(0.1))


class TestComparisonAndSymmetry:
    """Nodewise comparison and the E^{-phi} / E^{phi} symmetry"""

    def test_sqrt_comparison(self, tree8):
        """|B_T| >= B_T gives a nodewise ordering under sqrt|z|"""
        xi1 = CLAIM_BUILDERS["abs_B_T"](tree8)
        xi2 = CLAIM_BUILDERS["B_T"](tree8)
        assert comparison_check(sqrt_norm(), xi1, xi2).passed

    def test_identical_claims(self, tree8):
        """xi1 = xi2 compares equal"""
        xi = CLAIM_BUILDERS["B_T_sq"](tree8)
        assert comparison_check(mu_abs_z(0.2), xi, xi).passed

    def test_shift_by_one(self, tree8):
        """xi + 1 solves to Y + 1 for a z-only driver"""
        g = mu_abs_z(0.2)
        xi = CLAIM_BUILDERS["abs_B_T"](tree8)
        shifted = solve_bsde(g, xi + 1.0).Y
        base = solve_bsde(g, xi).Y
        for k in range(tree8.N + 1):
            assert np.allclose(shifted.at(k), base.at(k) + 1.0, atol=1e-12)

    def test_unordered_claims_rejected(self, tree8):
        """xi1 >= xi2 is a precondition"""
        with pytest.raises(ContractError):
            comparison_check(zero(), CLAIM_BUILDERS["B_T"](tree8), CLAIM_BUILDERS["abs_B_T"](tree8))

    def test_symmetry(self, tree8):
        """-E^{-phi}[X] = E^{phi}[-X] on the default corpus"""
        assert symmetry_check(linear_modulus(0.1), default_claims(tree8), tol=1e-12).passed


class TestSchemeGap:
    """Explicit against implicit over a list of N"""

    def test_z_only_driver_has_no_gap(self):
        """Both schemes coincide when g ignores y"""
        study = scheme_gap(sqrt_norm(), CLAIM_BUILDERS["abs_B_T"], [4, 8])
        assert study.to_frame()["gap"].max() <= 1e-12
        assert np.isnan(study.order)

    def test_y_dependent_gap_is_first_order(self):
        """a y gives a gap shrinking like dt"""
        study = scheme_gap(affine_y(0.5), lambda tree: AdaptedField.constant(tree, 1.0), [4, 8, 16])
        frame = study.to_frame()
        assert list(frame["gap"]) == sorted(frame["gap"], reverse=True)
        assert 0.8 < study.order < 1.2
        assert frame["refinement_gap"].iloc[-1] == 0.0
