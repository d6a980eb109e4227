"""Lifted-relaxation assembly, cone distance, Newton bracketing."""

import math

import numpy as np
import pytest

from symbb.dnn import (ApgParams, NbParams, _safe_ceil, assemble,
                       cone_distance, default_lambda, initial_upper,
                       lifted_form, nb_bound, penalty_value)
from symbb.subproblem import FixSets, reduce
from tests.conftest import (alternating_projection_distance, brute_sub_optimum,
                            random_bqop)

FAST_NB = NbParams(apg=ApgParams(rel_tol=1e-10, max_iter=5000))


def open_sub(seed=0, n=8, m=4):
    rng = np.random.default_rng(seed)
    inst = random_bqop(rng, n, m)
    return reduce(inst, FixSets((), ()))


class TestAssemble:
    def test_order(self):
        sub = open_sub()
        prob = assemble(sub, 10.0)
        assert prob.q_lam.shape == (2 * sub.ell + 1,) * 2
        assert prob.corner == 2 * sub.ell

    def test_symmetric(self):
        prob = assemble(open_sub(), 3.5)
        assert np.array_equal(prob.q_lam, prob.q_lam.T)

    def test_closed_form_at_origin(self):
        # u = v = 0, s = 1: objective 0, penalty ell + b^2.
        sub = open_sub()
        lam = 7.0
        prob = assemble(sub, lam)
        val = lifted_form(prob, np.zeros(sub.ell), np.zeros(sub.ell), 1.0)
        assert val == pytest.approx(lam * (sub.ell + sub.residual_m ** 2))

    def test_matches_direct_penalty_evaluation(self):
        sub = open_sub(seed=3)
        lam = 2.25
        prob = assemble(sub, lam)
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = rng.uniform(0, 2, sub.ell)
            v = rng.uniform(0, 2, sub.ell)
            s = float(rng.uniform(0, 2))
            direct = float(u @ sub.reduced_B @ u) + \
                lam * penalty_value(u, v, s, sub.residual_m)
            assert lifted_form(prob, u, v, s) == pytest.approx(direct, rel=1e-10)

    def test_feasible_binary_point_recovers_objective(self):
        sub = open_sub(seed=5)
        prob = assemble(sub, 11.0)
        u = np.zeros(sub.ell)
        u[: sub.residual_m] = 1.0
        v = 1.0 - u
        val = lifted_form(prob, u, v, 1.0)
        assert val == pytest.approx(float(u @ sub.reduced_B @ u))

    def test_empty_free_set_rejected(self, bqop6):
        sub = reduce(bqop6, FixSets(i0=tuple(range(5)), i1=(5,)))
        with pytest.raises(ValueError):
            assemble(sub, 1.0)

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ValueError):
            assemble(open_sub(), 0.0)


class TestDefaultLambda:
    def test_arithmetic(self):
        sub = open_sub()
        norm = float(np.linalg.norm(sub.reduced_B.astype(float)))
        assert default_lambda(sub) == pytest.approx(1e8 / norm)

    def test_homogeneity(self):
        sub = open_sub()
        scaled = reduce(
            type(sub.inst)(n=sub.inst.n, B=3 * sub.inst.B, m=sub.inst.m),
            sub.fix)
        assert default_lambda(scaled) == pytest.approx(default_lambda(sub) / 3)

    def test_zero_matrix_rejected(self):
        from symbb.instance import BqopInstance
        inst = BqopInstance(n=4, B=np.zeros((4, 4), dtype=np.int64), m=2)
        with pytest.raises(ValueError):
            default_lambda(reduce(inst, FixSets((), ())))


def test_initial_upper_exceeds_optimum():
    for seed in range(5):
        sub = open_sub(seed=seed)
        assert initial_upper(sub) > brute_sub_optimum(sub) - sub.offset


class TestConeDistance:
    def test_psd_matrix_inside(self):
        res = cone_distance(np.eye(4))
        assert res.g == pytest.approx(0.0, abs=1e-9)

    def test_negative_corner(self):
        # -H has a -1 diagonal entry; every cone element has nonnegative
        # diagonal, so the distance is exactly 1 (attained at Y = 0).
        M = np.zeros((3, 3))
        M[2, 2] = -1.0
        res = cone_distance(M)
        assert res.g == pytest.approx(1.0, abs=1e-9)

    def test_matches_alternating_projections(self):
        rng = np.random.default_rng(20)
        for _ in range(15):
            d = int(rng.integers(3, 8))
            M = rng.normal(0, 3, (d, d))
            M = M + M.T
            res = cone_distance(M)
            oracle = alternating_projection_distance(M)
            assert res.g == pytest.approx(oracle, abs=1e-7)

    def test_decomposition_consistency(self):
        rng = np.random.default_rng(21)
        M = rng.normal(0, 2, (6, 6))
        M = M + M.T
        res = cone_distance(M)
        assert np.all(res.y2 >= 0)
        assert np.linalg.norm(M - res.y1 - res.y2) == pytest.approx(res.g, abs=1e-8)
        assert np.min(np.linalg.eigvalsh(res.y1)) >= -1e-9 * max(1, np.linalg.norm(M))

    def test_derivative_matches_finite_differences(self):
        rng = np.random.default_rng(22)
        checked = 0
        while checked < 8:
            d = int(rng.integers(3, 8))
            M0 = rng.normal(0, 2, (d, d))
            M0 = M0 + M0.T
            c = d - 1
            y = float(np.trace(M0)) + d

            def g_at(yy):
                M = M0.copy()
                M[c, c] -= yy
                return cone_distance(M, corner=c)

            res = g_at(y)
            if res.g < 1e-6:
                continue
            h = 1e-5 * max(1.0, abs(y))
            fd = (g_at(y + h).g - g_at(y - h).g) / (2 * h)
            if abs(fd) < 1e-8:
                continue
            assert res.gprime == pytest.approx(fd, rel=1e-3)
            checked += 1

    def test_warm_start_agrees(self):
        rng = np.random.default_rng(23)
        M = rng.normal(0, 2, (6, 6))
        M = M + M.T
        cold = cone_distance(M)
        warm = cone_distance(M, warm_start=cold.y2 + 0.01)
        assert warm.g == pytest.approx(cold.g, abs=1e-7)


class TestSafeCeil:
    def test_plain(self):
        assert _safe_ceil(2.3) == 3
        assert _safe_ceil(-2.3) == -2

    def test_near_integer_from_above(self):
        assert _safe_ceil(5.0 + 1e-12) == 5

    def test_clearly_above_integer(self):
        assert _safe_ceil(5.1) == 6


class TestNbBound:
    def test_bracket_validity_and_tightness(self):
        for seed in range(4):
            sub = open_sub(seed=seed, n=8, m=4)
            opt = brute_sub_optimum(sub)
            prob = assemble(sub, default_lambda(sub))
            res = nb_bound(prob, None, FAST_NB)
            assert res.a + sub.offset <= opt + 1e-6
            assert res.status == "Converged"
            # Lag-DNN at the default weight is tight on these instances.
            assert res.a + sub.offset >= opt - 0.05 * max(1, abs(opt))

    def test_monotone_brackets(self):
        sub = open_sub(seed=7)
        prob = assemble(sub, default_lambda(sub))
        res = nb_bound(prob, None, FAST_NB)
        a_seq = [rec["a"] for rec in res.trace]
        b_seq = [rec["b"] for rec in res.trace]
        assert all(x <= y + 1e-12 for x, y in zip(a_seq, a_seq[1:]))
        assert all(x >= y - 1e-12 for x, y in zip(b_seq, b_seq[1:]))
        assert all(rec["a"] <= rec["b"] for rec in res.trace)

    def test_pruned_at_low_target(self):
        sub = open_sub(seed=1)
        prob = assemble(sub, default_lambda(sub))
        res = nb_bound(prob, -10 ** 9, FAST_NB)
        assert res.status == "Pruned"
        assert res.iterations == 1

    def test_branchable_at_unreachable_target(self):
        sub = open_sub(seed=1)
        prob = assemble(sub, default_lambda(sub))
        ub = initial_upper(sub)
        res = nb_bound(prob, int(ub + 10 ** 6), FAST_NB)
        assert res.status == "Branchable"

    def test_integer_bound_matches_optimum(self):
        sub = open_sub(seed=11, n=10, m=5)
        opt = brute_sub_optimum(sub)
        prob = assemble(sub, default_lambda(sub))
        res = nb_bound(prob, None, FAST_NB)
        assert res.lb_integer is not None
        assert res.lb_integer <= opt

    def test_lambda_monotonicity(self):
        sub = open_sub(seed=2)
        finals = []
        for scale in (1e2, 1e4, 1e6, 1e8):
            prob = assemble(sub, default_lambda(sub, scale))
            finals.append(nb_bound(prob, None, FAST_NB).a)
        for lo, hi in zip(finals, finals[1:]):
            assert hi >= lo - 1e-6 * max(1.0, abs(hi))

    def test_g_nonnegative_and_zero_below_a(self):
        sub = open_sub(seed=4)
        prob = assemble(sub, default_lambda(sub))
        res = nb_bound(prob, None, FAST_NB)
        M = prob.q_lam.copy()
        M[prob.corner, prob.corner] -= res.a - 5.0
        below = cone_distance(M, FAST_NB.apg)
        assert below.g <= 1e-6 * max(1.0, np.linalg.norm(M))

    def test_g_convex_above_bracket(self):
        sub = open_sub(seed=4)
        prob = assemble(sub, default_lambda(sub))
        res = nb_bound(prob, None, FAST_NB)

        def g_at(y):
            M = prob.q_lam.copy()
            M[prob.corner, prob.corner] -= y
            return cone_distance(M, FAST_NB.apg).g

        ys = res.b + np.array([1.0, 3.0, 5.0]) * max(1.0, abs(res.b)) * 0.01
        mid = g_at(ys[1])
        assert mid <= 0.5 * (g_at(ys[0]) + g_at(ys[2])) + 1e-6
