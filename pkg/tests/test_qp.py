import numpy as np
import pytest

import madpath as mp
from madpath.qp import INFEASIBLE, NUMERIC_FAILURE, OPTIMAL


def dykstra_projection(A, b, x, iters=8000):
    """Independent reference: Dykstra's alternating projections onto the
    half-spaces. Converges to the exact projection onto their
    intersection for feasible systems."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    u = np.asarray(x, dtype=float).copy()
    corrections = np.zeros((m, n))
    for _ in range(iters):
        shift = 0.0
        for i in range(m):
            v = u + corrections[i]
            ai = A[i]
            nrm2 = ai @ ai
            if nrm2 == 0:
                u_new = v
            else:
                viol = ai @ v - b[i]
                u_new = v - (max(viol, 0.0) / nrm2) * ai
            corrections[i] = v - u_new
            shift = max(shift, float(np.max(np.abs(u_new - u))))
            u = u_new
        if shift < 1e-12:
            break
    return u


def assert_certified(res):
    assert res.status == OPTIMAL
    assert res.kkt_residual <= 1e-7
    assert res.primal_violation <= 1e-8
    assert res.complementary_slackness <= 1e-8
    assert np.all(res.duals >= 0)


class TestSolve:
    def test_interior_start(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.array([1.0, 1.0])
        res = mp.solve_qp(A, b, np.array([0.2, -0.3]))
        assert res.status == OPTIMAL
        assert res.objective == 0.0
        assert res.active_set == ()
        assert np.allclose(res.x_opt, [0.2, -0.3])

    def test_halfspace_projection(self):
        # x1 >= 0.5 written as -x1 <= -0.5, project the origin
        res = mp.solve_qp(np.array([[-1.0, 0.0]]), np.array([-0.5]),
                          np.array([0.0, 0.0]))
        assert_certified(res)
        assert np.allclose(res.x_opt, [0.5, 0.0])
        assert res.objective == pytest.approx(0.25)

    def test_corner_projection(self):
        # intersection of x <= -1 and y <= -1, project (1, 2)
        A = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.array([-1.0, -1.0])
        res = mp.solve_qp(A, b, np.array([1.0, 2.0]))
        assert_certified(res)
        assert np.allclose(res.x_opt, [-1.0, -1.0])
        assert set(res.active_set) == {0, 1}

    def test_matches_dykstra_reference(self, rng):
        for trial in range(100):
            A = rng.normal(size=(5, 3))
            interior = rng.normal(size=3)
            slack = rng.uniform(0.05, 1.0, size=5)
            b = A @ interior + slack          # interior point certified
            x = rng.normal(scale=2.0, size=3)
            res = mp.solve_qp(A, b, x)
            assert_certified(res)
            ref = dykstra_projection(A, b, x)
            assert np.max(np.abs(res.x_opt - ref)) < 1e-6

    def test_redundant_duplicate_rows(self, rng):
        A = np.array([[-1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]])
        b = np.array([-0.5, -0.5, -0.5])
        res = mp.solve_qp(A, b, np.array([0.0, 0.0]))
        assert_certified(res)
        assert np.allclose(res.x_opt, [0.5, 0.0])

    def test_infeasible_box(self):
        A = np.array([[1.0], [-1.0]])
        b = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
        res = mp.solve_qp(A, b, np.array([0.0]))
        assert res.status == INFEASIBLE
        assert res.x_opt is None

    def test_zero_row_infeasible(self):
        res = mp.solve_qp(np.array([[0.0, 0.0]]), np.array([-1.0]),
                          np.zeros(2))
        assert res.status == INFEASIBLE

    def test_zero_row_vacuous(self):
        res = mp.solve_qp(np.array([[0.0, 0.0], [1.0, 0.0]]),
                          np.array([0.0, -2.0]), np.zeros(2))
        assert_certified(res)
        assert np.allclose(res.x_opt, [-2.0, 0.0])

    def test_optimality_against_sampled_feasible_points(self, rng):
        for _ in range(20):
            A = rng.normal(size=(6, 2))
            interior = rng.normal(size=2)
            b = A @ interior + rng.uniform(0.1, 0.8, size=6)
            x = rng.normal(scale=3.0, size=2)
            res = mp.solve_qp(A, b, x)
            assert_certified(res)
            # no sampled feasible point may be closer than the optimum
            samples = interior + rng.normal(scale=1.0, size=(500, 2))
            ok = np.all(samples @ A.T <= b, axis=1)
            if ok.any():
                d2 = ((samples[ok] - x) ** 2).sum(axis=1)
                assert res.objective <= d2.min() + 1e-9


class TestFeasibility:
    def test_strict_interior_margin(self):
        A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        b = np.array([1.0, 1.0, 1.0, 1.0])
        feas = mp.certify_feasibility(A, b)
        assert feas.feasible
        assert feas.margin == pytest.approx(1.0, abs=1e-6)  # deepest point: center
        assert np.all(A @ feas.point <= b - feas.margin + 1e-6)

    def test_empty(self):
        feas = mp.certify_feasibility(np.array([[1.0], [-1.0]]),
                                      np.array([-2.0, -2.0]))
        assert not feas.feasible
        assert feas.point is None

    def test_no_rows(self):
        feas = mp.certify_feasibility(np.zeros((0, 3)), np.zeros(0))
        assert feas.feasible
