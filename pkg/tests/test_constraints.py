import numpy as np
import pytest

from coolearn.core import JointWeights
from coolearn.constraints import (
    BoxSet,
    DiagonalWeight,
    JointStructure,
    is_feasible,
    project_box,
    set_norm,
    weighted_project,
)
from coolearn.hemimetric import matrix_from_weights, weights_from_matrix

from oracles import qp_project_hemimetric


class TestBoxProjection:
    def test_clamp_at_lower(self):
        box = BoxSet.interval(0, 40)
        assert project_box(np.array([-5.0]), box) == np.array([0.0])

    def test_interior_fixed(self):
        box = BoxSet.interval(0, 40)
        assert project_box(np.array([20.0]), box) == np.array([20.0])

    def test_componentwise(self):
        box = BoxSet.interval(0, 40, dim=2)
        assert np.array_equal(project_box(np.array([50.0, -1.0]), box), [40.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_box(np.array([1.0, 2.0, 3.0]), BoxSet.interval(0, 1, dim=2))

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError):
            BoxSet(np.array([1.0]), np.array([0.0]))


class TestSetNorm:
    def test_scalar_interval(self):
        assert set_norm(JointStructure.independent(BoxSet.interval(0, 40), 3)) == 40

    def test_cube_diagonal(self):
        s = JointStructure.independent(BoxSet.interval(0, 7, dim=4), 2)
        assert set_norm(s) == pytest.approx(7 * 2.0)  # r * sqrt(d)

    def test_degenerate(self):
        s = JointStructure.independent(BoxSet(np.array([3.0]), np.array([3.0])), 2)
        assert set_norm(s) == 0

    def test_unbounded_rejected(self):
        s = JointStructure.independent(BoxSet(np.array([0.0]), np.array([np.inf])), 1)
        with pytest.raises(ValueError):
            set_norm(s)


class TestIsFeasible:
    def test_hemimetric_zeros(self):
        s = JointStructure.hemimetric(4, 10.0)
        assert is_feasible(JointWeights(np.zeros((12, 1))), s)

    def test_hemimetric_triangle_violation(self):
        s = JointStructure.hemimetric(3, 10.0)
        m = np.ones((3, 3))
        np.fill_diagonal(m, 0.0)
        m[0, 2] = 5.0  # 5 > 1 + 1
        assert not is_feasible(weights_from_matrix(m, 3), s)

    def test_shared_unequal_blocks(self):
        s = JointStructure.shared(BoxSet.interval(0, 10), 3)
        assert not is_feasible(JointWeights(np.array([[1.0], [1.0], [2.0]])), s)
        assert is_feasible(JointWeights(np.array([[2.0], [2.0], [2.0]])), s)

    def test_box_violation(self):
        s = JointStructure.independent(BoxSet.interval(0, 10), 2)
        assert not is_feasible(JointWeights(np.array([[11.0], [5.0]])), s)

    def test_shared_prefix(self):
        s = JointStructure.shared_prefix(BoxSet.interval(0, 10, dim=2), 2, 1)
        assert is_feasible(JointWeights(np.array([[3.0, 1.0], [3.0, 9.0]])), s)
        assert not is_feasible(JointWeights(np.array([[3.0, 1.0], [4.0, 1.0]])), s)


class TestDiagonalWeight:
    def test_from_counts(self):
        q = DiagonalWeight.from_counts(np.array([0, 1, 4]), dim=2)
        assert np.allclose(q.entries, [0, 0, 1, 1, 2, 2])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            DiagonalWeight(np.array([-1.0]))

    def test_block_constancy_enforced(self):
        q = DiagonalWeight(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            q.block_weights(1, 2)


class TestWeightedProject:
    def test_feasible_point_is_fixed(self):
        structures = [
            JointStructure.independent(BoxSet.interval(0, 10), 3),
            JointStructure.shared(BoxSet.interval(0, 10), 3),
            JointStructure.hemimetric(3, 10.0),
        ]
        points = [
            JointWeights(np.array([[1.0], [9.0], [4.0]])),
            JointWeights(np.array([[4.0], [4.0], [4.0]])),
            weights_from_matrix(np.array([[0, 1, 2], [1.5, 0, 1], [2, 1, 0]], dtype=float), 3),
        ]
        for s, w in zip(structures, points):
            q = DiagonalWeight.from_counts(np.arange(1, s.num_problems + 1))
            res = weighted_project(w, q, s, accuracy=0.0)
            assert np.allclose(res.point.values, w.values, atol=1e-9)
            assert res.duality_gap <= 1e-9
            assert res.exact

    def test_shared_weighted_mean(self):
        # tau (1, 4), targets (3, 6): consensus (1*3 + 2*6) / 3 = 5
        s = JointStructure.shared(BoxSet.interval(0, 10), 2)
        q = DiagonalWeight.from_counts(np.array([1, 4]))
        res = weighted_project(JointWeights(np.array([[3.0], [6.0]])), q, s, 0.0)
        assert np.allclose(res.point.values, 5.0)
        assert res.exact

    def test_shared_weighted_mean_matches_grid_scan(self):
        # scan the 1-d objective as an independent check of the closed form
        rng = np.random.default_rng(6)
        s = JointStructure.shared(BoxSet.interval(0, 10), 4)
        tau = rng.integers(0, 9, 4)
        tau[0] = max(tau[0], 1)
        targets = rng.uniform(-2, 12, (4, 1))
        q = DiagonalWeight.from_counts(tau)
        res = weighted_project(JointWeights(targets), q, s, 0.0)
        grid = np.linspace(0, 10, 100001)
        vals = (np.sqrt(tau)[None, :] * (grid[:, None] - targets[:, 0]) ** 2).sum(axis=1)
        best = grid[np.argmin(vals)]
        assert res.point.values[0, 0] == pytest.approx(best, abs=1e-3)

    def test_zero_weight_blocks_snap_to_consensus(self):
        s = JointStructure.shared(BoxSet.interval(0, 10), 3)
        q = DiagonalWeight.from_counts(np.array([4, 0, 0]))
        res = weighted_project(JointWeights(np.array([[2.0], [9.0], [7.0]])), q, s, 0.0)
        assert np.allclose(res.point.values, 2.0)

    def test_all_zero_weights_rejected(self):
        s = JointStructure.shared(BoxSet.interval(0, 10), 2)
        q = DiagonalWeight.from_counts(np.array([0, 0]))
        with pytest.raises(ValueError):
            weighted_project(JointWeights(np.array([[3.0], [6.0]])), q, s, 0.0)

    def test_independent_equals_box_projection_for_any_q(self):
        rng = np.random.default_rng(7)
        s = JointStructure.independent(BoxSet.interval(0, 10, dim=2), 5)
        for _ in range(10):
            w = JointWeights(rng.uniform(-5, 15, (5, 2)))
            tau = rng.integers(0, 10, 5)
            tau[rng.integers(5)] = max(1, tau[rng.integers(5)])
            q = DiagonalWeight.from_counts(tau, dim=2)
            res = weighted_project(w, q, s, 0.0)
            assert np.array_equal(res.point.values, np.clip(w.values, 0, 10))
            assert res.exact

    def test_shared_prefix_consensus_on_prefix_only(self):
        s = JointStructure.shared_prefix(BoxSet.interval(0, 10, dim=2), 2, 1)
        q = DiagonalWeight.from_counts(np.array([1, 4]), dim=2)
        w = JointWeights(np.array([[3.0, 1.0], [6.0, 8.0]]))
        res = weighted_project(w, q, s, 0.0)
        assert np.allclose(res.point.values[:, 0], 5.0)
        assert np.allclose(res.point.values[:, 1], [1.0, 8.0])

    def test_hemimetric_matches_qp_oracle(self):
        rng = np.random.default_rng(8)
        s = JointStructure.hemimetric(3, 10.0)
        for _ in range(5):
            target = rng.uniform(-2, 13, (3, 3))
            np.fill_diagonal(target, 0.0)
            tau = rng.integers(1, 30, 6)
            q = DiagonalWeight.from_counts(tau)
            res = weighted_project(weights_from_matrix(target, 3), q, s, 0.0)
            w_opt, f_opt = qp_project_hemimetric(
                target, matrix_from_weights(JointWeights(np.sqrt(tau).reshape(-1, 1)), 3), 10.0
            )
            ours = matrix_from_weights(res.point, 3)
            off = ~np.eye(3, dtype=bool)
            f_ours = float(np.sum(np.sqrt(tau) * (ours[off] - target[off]) ** 2))
            assert f_ours <= f_opt + 1e-6
            assert np.max(np.abs(ours - w_opt)[off]) < 1e-4

    def test_accuracy_respected(self):
        rng = np.random.default_rng(9)
        s = JointStructure.hemimetric(4, 10.0)
        target = rng.uniform(0, 12, (4, 4))
        np.fill_diagonal(target, 0.0)
        q = DiagonalWeight.from_counts(rng.integers(1, 10, 12))
        res = weighted_project(weights_from_matrix(target, 4), q, s, accuracy=0.5)
        assert res.duality_gap <= 0.5
        assert is_feasible(res.point, s, 1e-9)


class TestProjectionInvariants:
    def _random_case(self, rng):
        kind = rng.integers(3)
        if kind == 0:
            s = JointStructure.independent(BoxSet.interval(0, 10), 4)
        elif kind == 1:
            s = JointStructure.shared(BoxSet.interval(0, 10), 4)
        else:
            s = JointStructure.hemimetric(3, 10.0)
        K = s.num_problems
        w = JointWeights(rng.uniform(-2, 12, (K, 1)))
        tau = rng.integers(0, 10, K)
        tau[0] = max(tau[0], 1)
        q = DiagonalWeight.from_counts(tau)
        return s, w, q

    def test_idempotence(self):
        rng = np.random.default_rng(10)
        for _ in range(15):
            s, w, q = self._random_case(rng)
            first = weighted_project(w, q, s, 0.0)
            second = weighted_project(first.point, q, s, 0.0)
            assert np.allclose(second.point.values, first.point.values, atol=1e-9)
            assert second.duality_gap <= 1e-9

    def test_nonexpansive_in_q_norm(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            s, w1, q = self._random_case(rng)
            w2 = JointWeights(rng.uniform(-2, 12, w1.values.shape))
            p1 = weighted_project(w1, q, s, 0.0).point
            p2 = weighted_project(w2, q, s, 0.0).point
            qdiag = q.entries.reshape(-1)

            def qnorm(a, b):
                d = (a.flat() - b.flat()) ** 2
                return float(np.sum(qdiag * d))

            assert qnorm(p1, p2) <= qnorm(w1, w2) + 1e-6

    def test_generalized_pythagorean(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            s, b, q = self._random_case(rng)
            # feasible u: project a random point first
            u = weighted_project(
                JointWeights(rng.uniform(-2, 12, b.values.shape)),
                DiagonalWeight.identity(s.num_problems, s.dim),
                s,
                0.0,
            ).point
            bhat = weighted_project(b, q, s, 0.0).point
            qdiag = q.entries.reshape(-1)

            def qd(a, c):
                return float(np.sum(qdiag * (a.flat() - c.flat()) ** 2))

            assert qd(u, b) >= qd(u, bhat) + qd(bhat, b) - 1e-6
