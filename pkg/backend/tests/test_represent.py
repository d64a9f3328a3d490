"""
Unit Tests for Generator Recovery and Representation Checks
"""

import json

import numpy as np
import pytest

from nlx.errors import ContractError
from nlx.fexp import CLAIM_BUILDERS, default_claims, drift_uncertainty, from_generator
from nlx.generators import linear_modulus, sqrt_norm
from nlx.lattice import AdaptedField
from nlx.represent import (
    RecoveredGenerator,
    normalize_grid,
    null_integral_check,
    recover_generator,
    uniqueness_check,
    verify_representation,
)

Z_GRID = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0]


def eta_process(tree, fn):
    return AdaptedField.process(tree, [fn(k) for k in range(tree.N + 1)], "eta")


class TestRecovery:
    """Short-horizon tabulation of g_hat"""

    def test_drift_uncertainty_table(self, tree10):
        """drift_uncertainty(0.1) recovers 0.1 |z| at every step"""
        E = drift_uncertainty(0.1, tree10)
        g_hat = recover_generator(E, Z_GRID)
        expected = 0.1 * np.abs(np.array(Z_GRID))
        for row in g_hat.table:
            assert np.allclose(row, expected, atol=1e-12)
        assert g_hat.richardson <= 1e-12
        assert verify_representation(E, g_hat).max_error <= 1e-12

    def test_sqrt_round_trip(self, tree8):
        """E^{sqrt|z|} is reproduced by its own recovery"""
        E = from_generator(sqrt_norm(), tree8)
        g_hat = recover_generator(E, Z_GRID)
        assert np.allclose(g_hat.table[0], np.sqrt(np.abs(Z_GRID)), atol=1e-12)
        claims = default_claims(tree8, keys=("const", "B_T"))
        report = verify_representation(E, g_hat, claims, tol=1e-10)
        assert report.passed, report.max_error
        assert g_hat.check_invariants().passed

    def test_single_step(self, drift8):
        """An integer t tabulates one step and reuses it everywhere"""
        g_hat = recover_generator(drift8, [0.0, 1.0], t=3)
        assert g_hat.steps == (3,)
        assert g_hat.evaluate(0, [[1.0]])[0][0] == pytest.approx(0.1)
        assert g_hat.evaluate(7, [[1.0]])[0][0] == pytest.approx(0.1)

    def test_single_horizon_has_no_richardson(self, drift8):
        """Richardson needs two horizons"""
        g_hat = recover_generator(drift8, [0.0, 1.0], horizon_steps=(1,))
        assert g_hat.richardson is None

    def test_doob_meyer_route(self, tree4):
        """The decomposition route agrees with the short-horizon table"""
        E = drift_uncertainty(0.1, tree4)
        g_hat = recover_generator(E, [0.0, 1.0, -2.0], via_doob_meyer=True)
        assert np.allclose(g_hat.table, [[0.0, 0.1, 0.2]] * 4, atol=1e-9)
        assert "Doob-Meyer" in g_hat.notes[0]

    def test_two_dimensional(self, tree2d):
        """Drift uncertainty in d = 2 recovers mu |z| on vector points"""
        E = drift_uncertainty(0.1, tree2d)
        g_hat = recover_generator(E, [[0.0, 0.0], [3.0, 4.0]])
        assert np.allclose(g_hat.table[:, 1], 0.5, atol=1e-12)

    def test_bad_arguments(self, drift8):
        """Steps, horizons, grid and node are checked"""
        with pytest.raises(ContractError):
            recover_generator(drift8, Z_GRID, t=[8])
        with pytest.raises(ContractError):
            recover_generator(drift8, Z_GRID, horizon_steps=(0,))
        with pytest.raises(ContractError):
            recover_generator(drift8, [])
        with pytest.raises(ContractError):
            recover_generator(drift8, Z_GRID, reference_node=-1)


class TestRecoveredGenerator:
    """Interpolation, serialization and invariants"""

    def _table(self):
        return RecoveredGenerator(horizon=1.0, N=4, d=1, steps=(0, 2), z_grid=[0.0, 1.0, 2.0],
                                  table=[[0.0, 0.1, 0.2], [0.0, 0.2, 0.4]],
                                  modulus=linear_modulus(0.5), source="table")

    def test_interpolation_by_step(self):
        """Rows apply from their step until the next tabulated step"""
        g_hat = self._table()
        assert g_hat.evaluate(1, [[0.5]])[0][0] == pytest.approx(0.05)
        assert g_hat.evaluate(3, [[-0.5]])[0][0] == pytest.approx(0.1)

    def test_extrapolation_flagged(self):
        """Points beyond the grid are extrapolated linearly and flagged"""
        values, outside = self._table().evaluate(0, [[1.0], [3.0]])
        assert values[1] == pytest.approx(0.3)
        assert outside.tolist() == [False, True]

    def test_nearest(self):
        """Nearest-neighbour lookup in z"""
        g_hat = RecoveredGenerator(horizon=1.0, N=4, d=1, steps=(0,), z_grid=[-1.0, 1.0],
                                   table=[[0.3, 0.1]], modulus=linear_modulus(0.5),
                                   interpolation="nearest")
        assert g_hat.evaluate(0, [[-0.8], [0.9]])[0].tolist() == [0.3, 0.1]

    def test_signed_needs_one_dimension(self):
        """linear_signed is a d = 1 interpolation"""
        with pytest.raises(ContractError):
            RecoveredGenerator(horizon=1.0, N=4, d=2, steps=(0,), z_grid=[[0.0, 0.0]],
                               table=[[0.0]], modulus=linear_modulus(0.5),
                               interpolation="linear_signed")

    def test_json_round_trip(self):
        """to_json and from_json preserve the table and modulus"""
        g_hat = self._table()
        again = RecoveredGenerator.from_json(json.dumps(g_hat.to_json()))
        assert np.array_equal(again.table, g_hat.table)
        assert again.steps == (0, 2)
        assert again.modulus(2.0) == pytest.approx(1.0)

    def test_invariants_flag_domination(self):
        """A table above phi(|z|) fails the invariants"""
        g_hat = RecoveredGenerator(horizon=1.0, N=4, d=1, steps=(0,), z_grid=[0.0, 1.0],
                                   table=[[0.0, 0.8]], modulus=linear_modulus(0.5))
        assert not g_hat.check_invariants().passed

    def test_anisotropic_note(self):
        """linear_abs on an asymmetric table reports its isotropy spread"""
        g_hat = RecoveredGenerator(horizon=1.0, N=4, d=1, steps=(0,), z_grid=[-1.0, 0.0, 1.0],
                                   table=[[0.1, 0.0, 0.3]], modulus=linear_modulus(0.5))
        report = g_hat.check_invariants()
        assert report.metrics["isotropy_spread"] == pytest.approx(0.1)
        assert report.notes

    def test_normalize_grid(self):
        """Scalars become single-component points"""
        assert normalize_grid([1.0, 2.0], 1).shape == (2, 1)
        with pytest.raises(ContractError):
            normalize_grid([[1.0, 2.0, 3.0]], 2)


class TestRepresentationChecks:
    """Uniqueness and the null integral"""

    def test_uniqueness_across_horizons(self, drift8):
        """Horizons 1 and 2 and different reference nodes give the same g_hat"""
        a = recover_generator(drift8, Z_GRID, horizon_steps=(1,))
        b = recover_generator(drift8, Z_GRID, horizon_steps=(2,), reference_node=3)
        assert uniqueness_check(a, b).passed

    def test_different_operators(self, tree8):
        """mu = 0.1 and mu = 0.2 differ by 0.1 |z|"""
        a = recover_generator(drift_uncertainty(0.1, tree8), Z_GRID)
        b = recover_generator(drift_uncertainty(0.2, tree8), Z_GRID)
        report = uniqueness_check(a, b)
        assert not report.passed
        assert report.metrics["max_difference"] == pytest.approx(0.4, abs=1e-12)

    def test_null_integral(self, drift8, tree8):
        """Zero, constant and sign-switching eta all give zero"""
        g_hat = recover_generator(drift8, Z_GRID)
        cases = [
            lambda k: np.zeros(tree8.node_count(k)),
            lambda k: np.full(tree8.node_count(k), 0.5),
            lambda k: np.sign(tree8.brownian_at(k)[:, 0]) * 0.5,
        ]
        for fn in cases:
            report = null_integral_check(g_hat, eta_process(tree8, fn), 0, tree8.N, tol=1e-10)
            assert report.passed
            assert report.metrics["extrapolated"] == 0.0

    def test_null_integral_window(self, drift8, tree8):
        """r <= t and eta must cover [r, t)"""
        g_hat = recover_generator(drift8, Z_GRID)
        eta = eta_process(tree8, lambda k: np.full(tree8.node_count(k), 1.0))
        assert null_integral_check(g_hat, eta, 2, 5).passed
        with pytest.raises(ContractError):
            null_integral_check(g_hat, eta, 5, 2)

    def test_verify_wrong_tree(self, drift8, tree4):
        """A table recovered on one tree cannot verify another"""
        g_hat = recover_generator(drift_uncertainty(0.1, tree4), [0.0, 1.0])
        with pytest.raises(ContractError):
            verify_representation(drift8, g_hat)

    def test_verify_reports_extrapolation(self, drift8, tree8):
        """Integrands outside a narrow grid are noted"""
        g_hat = recover_generator(drift8, [0.0, 0.5])
        report = verify_representation(drift8, g_hat, [CLAIM_BUILDERS["B_T_sq"](tree8)])
        assert report.claims[0].extrapolated_count > 0
        assert report.notes
