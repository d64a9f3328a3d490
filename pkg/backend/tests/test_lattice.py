"""
Unit Tests for the Filtration Tree

Node addressing, exact conditional expectations, adapted fields, stopping
times and events.
"""

import numpy as np
import pytest

from nlx.config import settings
from nlx.errors import ContractError, NumericError, ResourceBudgetError
from nlx.lattice import (
    AdaptedField,
    Event,
    StoppingTime,
    TimeGrid,
    build_tree,
    cond_expect,
    increment_table,
    project_increment,
    stopped_value,
)


class TestTimeGrid:
    """Uniform grid on [0, T]"""

    def test_dt_and_times(self):
        """dt = T/N and times run from 0 to T"""
        grid = TimeGrid(2.0, 4)
        assert grid.dt == 0.5
        assert np.allclose(grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_rejects_zero_steps(self):
        """N must be a positive integer"""
        with pytest.raises(ContractError):
            TimeGrid(1.0, 0)

    def test_rejects_nonpositive_horizon(self):
        """T must be positive"""
        with pytest.raises(ContractError):
            TimeGrid(-1.0, 4)


class TestTreeShape:
    """Branching, node counts and the resource budget"""

    def test_node_counts_d1(self, tree4):
        """Step k of a d = 1 tree has 2^k nodes"""
        assert [tree4.node_count(k) for k in range(5)] == [1, 2, 4, 8, 16]
        assert tree4.leaf_count == 16

    def test_node_counts_d2(self, tree2d):
        """Step k of a d = 2 tree has 4^k nodes"""
        assert tree2d.branching == 4
        assert tree2d.leaf_count == 64

    def test_increment_table_child_order(self):
        """Child c moves coordinate j up iff bit (d-1-j) of c is set"""
        table = increment_table(2)
        assert table.tolist() == [[-1, -1], [-1, 1], [1, -1], [1, 1]]

    def test_budget_exceeded(self):
        """N*d above the budget raises before any allocation"""
        with pytest.raises(ResourceBudgetError) as exc:
            build_tree(1.0, d=1, steps=settings.NLX_MAX_TREE_EXPONENT + 1)
        assert exc.value.limit == settings.NLX_MAX_TREE_EXPONENT

    def test_first_step_brownian(self, tree4):
        """B_1 is -sqrt(dt) on child 0 and +sqrt(dt) on child 1"""
        assert np.allclose(tree4.brownian_at(1)[:, 0], [-0.5, 0.5])

    def test_lift_is_repeat(self, tree4):
        """Lifting copies each node value over its block"""
        lifted = tree4.lift(np.array([1.0, 2.0]), 1, 3)
        assert lifted.tolist() == [1.0] * 4 + [2.0] * 4

    def test_lift_backwards_rejected(self, tree4):
        """Values cannot be lifted to an earlier step"""
        with pytest.raises(ContractError):
            tree4.lift(np.zeros(4), 2, 1)


class TestConditionalExpectation:
    """Exact one-step averages and increment projections"""

    def test_brownian_is_martingale(self, tree8):
        """E[B_{k+1}|F_k] = B_k at every node"""
        for k in range(tree8.N):
            cond = cond_expect(tree8.brownian, k).at(k)
            assert np.allclose(cond, tree8.brownian_at(k), atol=1e-15)

    def test_projection_of_brownian_is_one(self, tree8):
        """The increment coefficient of B is exactly 1"""
        for k in range(tree8.N):
            z = project_increment(tree8.brownian.map(lambda v: v[:, 0]), k).at(k)
            assert np.allclose(z, 1.0, atol=1e-12)

    def test_projection_two_dimensions(self, tree2d):
        """Projecting B^2 recovers the unit vector e_2"""
        for k in range(tree2d.N):
            z = tree2d.project_children(tree2d.brownian_at(k + 1)[:, 1], k)
            assert np.allclose(z, [[0.0, 1.0]] * tree2d.node_count(k), atol=1e-12)

    def test_representation_is_exact(self, tree8):
        """f = E[f|F_k] + sqrt(dt) Z eps at every child of every node (d = 1)"""
        rng = np.random.default_rng(7)
        f = AdaptedField.process(tree8, [rng.uniform(-1.0, 1.0, tree8.node_count(k))
                                         for k in range(tree8.N + 1)])
        for k in range(tree8.N):
            cond = cond_expect(f, k).at(k)
            z = project_increment(f, k).at(k)[:, 0]
            eps = np.tile(tree8.increments[:, 0], tree8.node_count(k))
            rebuilt = np.repeat(cond, 2) + tree8.sqrt_dt * np.repeat(z, 2) * eps
            assert np.allclose(rebuilt, f.at(k + 1), rtol=0.0, atol=1e-14)

    def test_residual_orthogonal_two_dimensions(self, tree2d):
        """f - E[f|F_k] - sqrt(dt) z . eps is orthogonal to each eps^i (d = 2)"""
        rng = np.random.default_rng(11)
        f = AdaptedField.process(tree2d, [rng.uniform(-1.0, 1.0, tree2d.node_count(k))
                                          for k in range(tree2d.N + 1)])
        for k in range(tree2d.N):
            n = tree2d.node_count(k)
            cond = cond_expect(f, k).at(k)
            z = project_increment(f, k).at(k)
            span = tree2d.sqrt_dt * (z @ tree2d.increments.T)
            residual = f.at(k + 1).reshape(n, 4) - cond[:, None] - span
            assert np.allclose(residual @ tree2d.increments, 0.0, atol=1e-14)
            assert np.allclose(residual.sum(axis=1), 0.0, atol=1e-14)

    def test_projection_of_squared_brownian(self):
        """B_T^2 on N = 2 has Z = 2 B_1 = +-2 sqrt(0.5) at step 1"""
        tree = build_tree(1.0, d=1, steps=2)
        f = AdaptedField.claim(tree, tree.brownian.terminal[:, 0] ** 2)
        z = project_increment(f, 1).at(1)[:, 0]
        assert np.allclose(z, [-2.0 * np.sqrt(0.5), 2.0 * np.sqrt(0.5)], atol=1e-14)

    def test_mean_to_iterates(self, tree4):
        """Averaging the leaves down to step 0 gives the plain mean"""
        leaves = np.arange(16, dtype=float)
        assert tree4.mean_to(leaves, 4, 0)[0] == pytest.approx(7.5)

    def test_measurable_step(self, tree8):
        """B_3 lifted to the leaves is first measurable at step 3"""
        leaves = tree8.brownian.lifted(3)[:, 0]
        assert tree8.measurable_step(leaves) == 3


class TestAdaptedField:
    """Construction, access and arithmetic"""

    def test_claim_is_frozen(self, tree4):
        """Claim arrays are read-only copies"""
        source = np.zeros(16)
        xi = AdaptedField.claim(tree4, source)
        source[0] = 5.0
        assert xi.terminal[0] == 0.0
        assert not xi.terminal.flags.writeable

    def test_non_finite_claim(self, tree4):
        """A NaN leaf raises with the leaf index"""
        leaves = np.zeros(16)
        leaves[3] = np.nan
        with pytest.raises(NumericError) as exc:
            AdaptedField.claim(tree4, leaves)
        assert exc.value.node == 3

    def test_undefined_step(self, tree4):
        """Reading a step a claim does not carry raises"""
        with pytest.raises(ContractError):
            AdaptedField.constant(tree4, 1.0).at(0)

    def test_arithmetic(self, tree4):
        """Sum and scalar product act leafwise"""
        a = AdaptedField.constant(tree4, 1.0)
        b = AdaptedField.constant(tree4, 2.0)
        assert np.all((a + b * 3.0).terminal == 7.0)
        assert np.all((-a).terminal == -1.0)

    def test_wrong_shape(self, tree4):
        """A claim needs one value per leaf"""
        with pytest.raises(ContractError):
            AdaptedField.claim(tree4, np.zeros(15))

    def test_json_header_mismatch(self, tree4, tree8):
        """A field serialized on one tree cannot load onto another"""
        data = AdaptedField.constant(tree4, 1.0).to_json()
        with pytest.raises(ContractError):
            AdaptedField.from_json(tree8, data)

    def test_json_reload(self, tree4):
        """A process reloads with identical values"""
        data = tree4.brownian.to_json()
        again = AdaptedField.from_json(tree4, data)
        assert again.max_abs_diff(tree4.brownian) == 0.0


class TestStoppingTimes:
    """Stopping-time validation and stopped values"""

    def test_non_adapted_rejected(self, tree4):
        """{tau = 1} must be a union of step-1 blocks"""
        steps = np.full(16, 4)
        steps[0] = 1
        with pytest.raises(ContractError):
            StoppingTime(tree4, steps)

    def test_hitting_time(self, tree4):
        """Paths that move up first hit 0.4 at step 1"""
        tau = StoppingTime.hitting_time(tree4.brownian.map(lambda v: v[:, 0]), 0.4)
        assert np.all(tau.leaf_steps[8:] == 1)
        assert tau.node_mask(1).tolist() == [False, True]

    def test_stopped_value_deterministic(self, tree4):
        """Stopping B at t = 2 gives B_2 on the leaves"""
        b = tree4.brownian.map(lambda v: v[:, 0])
        stopped = stopped_value(b, StoppingTime.deterministic(tree4, 2))
        assert np.allclose(stopped.terminal, tree4.brownian.lifted(2)[:, 0])

    def test_stopped_value_hitting_time(self, tree4):
        """B stopped at the first hit of +sqrt(dt) is sqrt(dt) on hit paths, else B_N"""
        b = tree4.brownian.map(lambda v: v[:, 0])
        tau = StoppingTime.hitting_time(b, tree4.sqrt_dt)
        stopped = stopped_value(b, tau).terminal
        hit = tau.leaf_steps < tree4.N
        assert hit.any() and not hit.all()
        assert np.all(stopped[hit] == tree4.sqrt_dt)
        assert np.array_equal(stopped[~hit], b.terminal[~hit])

    def test_minimum(self, tree4):
        """sigma ^ tau takes the leafwise minimum"""
        sigma = StoppingTime.deterministic(tree4, 2)
        tau = StoppingTime.hitting_time(tree4.brownian.map(lambda v: v[:, 0]), 0.4)
        both = sigma.minimum(tau)
        assert np.all(both.leaf_steps == np.minimum(2, tau.leaf_steps))


class TestEvents:
    """Leaf masks with their first measurable step"""

    def test_from_leaves_step(self, tree4):
        """{B_1 > 0} is F_1-measurable"""
        event = Event.from_leaves(tree4, tree4.brownian.lifted(1)[:, 0] > 0)
        assert event.step == 1

    def test_node_mask_too_early(self, tree4):
        """An F_2 event has no step-1 node mask"""
        event = Event.at_step(tree4, 2, [True, False, False, False])
        with pytest.raises(ContractError):
            event.node_mask(1)

    def test_cylinders_capped_at_n(self, tree4):
        """Cylinders at steps beyond N are skipped"""
        events = Event.cylinders(tree4, steps=(1, 9))
        assert len(events) == 2
