import numpy as np
import pytest

from coolearn.core import JointWeights
from coolearn.hemimetric import (
    HemimetricMatrix,
    duality_gap,
    fw_repair,
    matrix_from_weights,
    project_hemimetric,
    satisfies_triangles,
    weights_from_matrix,
)

from oracles import brute_force_shortest_paths, qp_project_hemimetric


def recompute_dual_from_multipliers(lam, weights, target, r):
    """Independent evaluation of the reported dual value from the triangle
    multipliers: v = A' lam, then the box-domain Lagrangian minimum, doubled."""
    n = target.shape[0]
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for k in range(n):
                if k in (i, j):
                    continue
                m = lam[i, j, k]
                if m != 0.0:
                    v[i, j] += m
                    v[i, k] -= m
                    v[k, j] -= m
    g = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if weights[i, j] > 0:
                x = np.clip(target[i, j] - v[i, j] / weights[i, j], 0.0, r)
                g += 0.5 * weights[i, j] * (x - target[i, j]) ** 2 + v[i, j] * x
            else:
                g += r * min(0.0, v[i, j])
    return 2.0 * g


class TestFwRepair:
    def test_violated_triangle_shrinks_to_path(self):
        r = 10.0
        m = np.full((3, 3), r)
        np.fill_diagonal(m, 0.0)
        m[0, 1] = 1.0
        m[1, 2] = 1.0
        m[0, 2] = 5.0
        out = fw_repair(m, r)
        expected = brute_force_shortest_paths(np.clip(m, 0, r))
        assert np.allclose(out.values, expected)
        assert out.values[0, 2] == 2.0

    def test_feasible_matrix_unchanged(self):
        m = np.array([[0.0, 2.0, 3.0], [2.5, 0.0, 1.5], [3.0, 1.0, 0.0]])
        out = fw_repair(m, 10.0)
        assert np.array_equal(out.values, m)

    def test_asymmetry_preserved(self):
        m = np.array([[0.0, 1.0], [9.0, 0.0]])
        out = fw_repair(m, 10.0)
        assert out.values[0, 1] == 1.0 and out.values[1, 0] == 9.0

    def test_clamps_into_box_first(self):
        m = np.array([[0.0, 15.0, -3.0], [1.0, 0.0, 1.0], [2.0, 2.0, 0.0]])
        out = fw_repair(m, 10.0)
        assert out.values.max() <= 10.0 and out.values.min() >= 0.0
        # (0,2) clamps to 0, so (0,1) can shrink through it
        assert out.values[0, 2] == 0.0
        assert out.values[0, 1] == 2.0

    def test_matches_brute_force_on_random(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            n = int(rng.integers(3, 6))
            m = rng.uniform(0, 10, (n, n))
            np.fill_diagonal(m, 0.0)
            out = fw_repair(m, 10.0)
            assert np.allclose(out.values, brute_force_shortest_paths(m))

    def test_rejects_non_finite(self):
        m = np.array([[0.0, np.inf], [1.0, 0.0]])
        with pytest.raises(ValueError):
            fw_repair(m, 10.0)


class TestHemimetricMatrix:
    def test_rejects_triangle_violation(self):
        m = np.ones((3, 3))
        np.fill_diagonal(m, 0.0)
        m[0, 2] = 5.0
        with pytest.raises(ValueError):
            HemimetricMatrix(3, m, 10.0)

    def test_rejects_out_of_box(self):
        m = np.zeros((3, 3))
        m[0, 1] = 11.0
        with pytest.raises(ValueError):
            HemimetricMatrix(3, m, 10.0)

    def test_pair_vector_roundtrip(self):
        rng = np.random.default_rng(21)
        m = rng.uniform(0, 5, (4, 4))
        np.fill_diagonal(m, 0.0)
        w = weights_from_matrix(m, 4)
        assert isinstance(w, JointWeights)
        assert np.array_equal(matrix_from_weights(w, 4), m)


class TestProjectHemimetric:
    def test_feasible_target_returned_exactly(self):
        m = np.array([[0.0, 2.0, 3.0], [2.5, 0.0, 1.5], [3.0, 1.0, 0.0]])
        weights = np.ones((3, 3))
        np.fill_diagonal(weights, 0.0)
        rep = project_hemimetric(m, weights, 10.0, gap_tolerance=0.0)
        assert np.allclose(rep.primal.values, m, atol=1e-12)
        assert rep.gap <= 1e-12
        assert rep.sweeps == 1
        assert rep.converged

    def test_single_violated_triangle_matches_oracle(self):
        r = 10.0
        m = np.full((3, 3), 4.0)
        np.fill_diagonal(m, 0.0)
        m[0, 1] = 9.0  # 9 > 4 + 4 violated
        m[0, 2] = 4.0
        m[2, 1] = 4.0
        weights = np.ones((3, 3))
        np.fill_diagonal(weights, 0.0)
        rep = project_hemimetric(m, weights, r, gap_tolerance=0.0)
        w_opt, f_opt = qp_project_hemimetric(m, weights, r)
        off = ~np.eye(3, dtype=bool)
        f_ours = float(np.sum(weights[off] * (rep.primal.values - m)[off] ** 2))
        assert f_ours <= f_opt + 1e-6
        assert np.max(np.abs(rep.primal.values - w_opt)[off]) < 1e-4

    def test_requested_gap_certified_and_recomputable(self):
        rng = np.random.default_rng(22)
        n, r = 10, 10.0
        target = rng.uniform(0, 12, (n, n))
        np.fill_diagonal(target, 0.0)
        weights = rng.uniform(0.5, 4.0, (n, n))
        np.fill_diagonal(weights, 0.0)
        delta = 2.0
        rep = project_hemimetric(target, weights, r, gap_tolerance=delta)
        assert rep.converged and rep.gap <= delta
        # recompute primal and dual from the report state independently
        off = ~np.eye(n, dtype=bool)
        primal = float(np.sum(weights[off] * (rep.primal.values - target)[off] ** 2))
        assert primal == pytest.approx(rep.primal_value, abs=1e-9)
        dual = recompute_dual_from_multipliers(rep.duals.triangle, weights, target, r)
        assert dual == pytest.approx(rep.dual_value, rel=1e-9, abs=1e-9)
        assert duality_gap(rep) == pytest.approx(primal - dual, abs=1e-6)

    def test_weak_duality_and_monotone_ascent(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            n = int(rng.integers(3, 7))
            target = rng.uniform(-2, 13, (n, n))
            np.fill_diagonal(target, 0.0)
            weights = rng.uniform(0, 4.0, (n, n))
            np.fill_diagonal(weights, 0.0)
            if weights.max() == 0:
                continue
            rep = project_hemimetric(target, weights, 10.0, gap_tolerance=0.0, max_sweeps=200)
            assert rep.gap >= -1e-9
            hist = rep.dual_history
            assert np.all(np.diff(hist) >= -1e-9 * np.maximum(1.0, np.abs(hist[1:])))
            # every sweep's dual lower-bounds the primal of the best candidate
            assert np.all(hist <= rep.primal_value + 1e-9)

    def test_scale_covariance(self):
        rng = np.random.default_rng(24)
        n = 4
        target = rng.uniform(0, 12, (n, n))
        np.fill_diagonal(target, 0.0)
        weights = rng.uniform(0.5, 3.0, (n, n))
        np.fill_diagonal(weights, 0.0)
        base = project_hemimetric(target, weights, 10.0, gap_tolerance=0.0)
        for c in (0.5, 3.0):
            scaled = project_hemimetric(c * target, weights, c * 10.0, gap_tolerance=0.0)
            assert np.allclose(scaled.primal.values, c * base.primal.values, atol=2e-4 * max(1, c))

    def test_suboptimality_bounded_by_gap(self):
        # the Q-weighted squared distance to the exact projection never
        # exceeds the certified gap
        rng = np.random.default_rng(25)
        for _ in range(10):
            target = rng.uniform(-2, 13, (3, 3))
            np.fill_diagonal(target, 0.0)
            weights = rng.uniform(0.3, 3.0, (3, 3))
            np.fill_diagonal(weights, 0.0)
            delta = float(rng.uniform(0.1, 3.0))
            rep = project_hemimetric(target, weights, 10.0, gap_tolerance=delta)
            w_hat, _ = qp_project_hemimetric(target, weights, 10.0)
            off = ~np.eye(3, dtype=bool)
            dist = float(np.sum(weights[off] * (rep.primal.values - w_hat)[off] ** 2))
            assert dist <= rep.gap + 1e-6

    def test_zero_weight_pairs_completed_feasibly(self):
        # unobserved pairs keep their values when the target is feasible and
        # take repaired values otherwise
        m = np.array([[0.0, 2.0, 3.0], [2.5, 0.0, 1.5], [3.0, 1.0, 0.0]])
        weights = np.zeros((3, 3))
        weights[0, 1] = 2.0
        rep = project_hemimetric(m, weights, 10.0, gap_tolerance=0.0)
        assert np.allclose(rep.primal.values, m, atol=1e-12)

    def test_negative_weight_rejected(self):
        weights = np.zeros((3, 3))
        weights[0, 1] = -1.0
        with pytest.raises(ValueError):
            project_hemimetric(np.zeros((3, 3)), weights, 10.0)

    def test_sweep_budget_exhaustion_reports_honestly(self):
        rng = np.random.default_rng(26)
        target = rng.uniform(0, 12, (6, 6))
        np.fill_diagonal(target, 0.0)
        weights = rng.uniform(0.5, 3.0, (6, 6))
        np.fill_diagonal(weights, 0.0)
        rep = project_hemimetric(target, weights, 10.0, gap_tolerance=0.0, max_sweeps=2)
        assert rep.sweeps == 2
        assert rep.gap >= -1e-9
        assert satisfies_triangles(rep.primal.values)
        full = project_hemimetric(target, weights, 10.0, gap_tolerance=0.0)
        assert full.gap <= rep.gap + 1e-12


class TestMatrixBridges:
    def test_matrix_from_weights_validates_shape(self):
        with pytest.raises(ValueError):
            matrix_from_weights(JointWeights(np.zeros((5, 1))), 3)
