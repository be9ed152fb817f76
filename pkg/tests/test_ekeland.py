"""Finite-set Ekeland principle, quadruplication and Jensen checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evikit.core import StatePoint, UsageError
from evikit.ekeland import (
    EkelandProblem,
    ekeland_optimize,
    jensen_distance_check,
    quadruplicate,
    tataru_penalty,
    verify_ekeland_result,
    verify_key_estimates,
)
from evikit.hj import GridFunction, make_data_function, solve_resolvent_quadratic
from evikit.spaces import CirDescriptor, make_cir, make_ou


def line_problem(g_values, delta, x_hat):
    xs = np.arange(len(g_values)) / 10.0
    pts = [StatePoint.of(v) for v in xs]
    return EkelandProblem(pts, g_values, lambda i, j: abs(xs[i] - xs[j]),
                          delta, x_hat,
                          penalty_batch=lambda j: np.abs(xs - xs[j]))


class TestEkelandPrinciple:
    def test_parabola_walk_and_exhaustive_invariants(self):
        xs = np.arange(101) / 10.0
        prob = line_problem(-(xs - 3.14) ** 2, 0.1, 0)
        prob.validate_penalty()
        res = ekeland_optimize(prob)
        assert xs[res.x_delta] == pytest.approx(3.1)
        chk = verify_ekeland_result(prob, res)
        assert chk["inv1_slack"] >= 0.0
        assert chk["inv2_max"] <= 0.0
        assert chk["uniqueness_margin"] > 0.0

    def test_constant_objective_stays_put(self):
        prob = line_problem(np.zeros(101), 0.1, 17)
        res = ekeland_optimize(prob)
        assert res.x_delta == 17 and res.iterations == 0

    def test_huge_delta_forbids_moves(self):
        xs = np.arange(101) / 10.0
        # delta > 2 range(G) / min positive B
        prob = line_problem(-(xs - 3.14) ** 2, 1e5, 0)
        res = ekeland_optimize(prob)
        assert res.x_delta == 0
        chk = verify_ekeland_result(prob, res)
        assert chk["inv2_max"] <= 0.0

    def test_infinite_start_rejected(self):
        g = np.zeros(101)
        g[0] = -math.inf
        with pytest.raises(UsageError):
            ekeland_optimize(line_problem(g, 0.1, 0))

    def test_near_optimal_start_consequence(self):
        xs = np.arange(101) / 10.0
        g = -(xs - 3.14) ** 2
        delta = 0.5
        starts = np.where(g >= g.max() - 0.5 * delta**2)[0]
        for x_hat in starts:
            prob = line_problem(g, delta, int(x_hat))
            res = ekeland_optimize(prob)
            chk = verify_ekeland_result(prob, res)
            assert chk["near_optimal_start"]
            assert chk["penalty_to_start"] <= delta + 1e-12

    @given(st.lists(st.floats(min_value=-100, max_value=100), min_size=3,
                    max_size=60),
           st.floats(min_value=0.01, max_value=10.0))
    @settings(max_examples=120, deadline=None)
    def test_invariants_hold_on_random_instances(self, values, delta):
        g = np.asarray(values)
        prob = line_problem(g, delta, 0)
        res = ekeland_optimize(prob)
        chk = verify_ekeland_result(prob, res)
        assert chk["inv1_slack"] >= -1e-10
        assert chk["inv2_max"] <= 1e-10

    def test_problem_validation(self):
        pts = [StatePoint.of(v) for v in (0.0, 1.0)]
        with pytest.raises(UsageError):
            EkelandProblem(pts, np.zeros(2), lambda i, j: 0.0, -1.0, 0)
        with pytest.raises(UsageError):
            EkelandProblem(pts, np.array([0.0, math.inf]), lambda i, j: 0.0, 1.0, 0)
        bad = EkelandProblem(pts, np.zeros(2), lambda i, j: -1.0 if i != j else 0.0,
                             1.0, 0)
        with pytest.raises(UsageError):
            bad.validate_penalty()


class TestTataruPenalty:
    def test_vanishes_on_diagonal(self):
        ou = make_ou(1.0)
        B = tataru_penalty(ou, 0.1)
        x = tuple(StatePoint.of(v) for v in (0.0, 1.0, 2.0, 3.0))
        assert B(x, x) == 0.0

    def test_weight_arithmetic(self):
        # differing only in the first slot by d_T = 2 -> 2 / (1 - eps)
        ou = make_ou(1.0)
        B = tataru_penalty(ou, 0.1)
        x1 = tuple(StatePoint.of(v) for v in (0.0, 1.0, 2.0, 3.0))
        x2 = tuple(StatePoint.of(v) for v in (2.0, 1.0, 2.0, 3.0))
        assert B(x2, x1) == pytest.approx(2.0 / 0.9, abs=1e-6)

    def test_triangle_inequality_sampled(self):
        ou = make_ou(1.0)
        B = tataru_penalty(ou, 0.2)
        rng = np.random.default_rng(3)
        for _ in range(25):
            x, y, z = (tuple(ou.sample_point(rng) for _ in range(4))
                       for _ in range(3))
            assert B(x, z) <= B(x, y) + B(y, z) + 1e-8

    def test_eps_range_enforced(self):
        with pytest.raises(UsageError):
            tataru_penalty(make_ou(1.0), 0.5)


@pytest.fixture(scope="module")
def desk_case():
    ou = make_ou(1.0)
    h = make_data_function("gaussian_bump", center=0.7, width=0.6, height=1.0)
    u = solve_resolvent_quadratic(ou, 1.0, h, -2.0, 2.0, 21, 1e-8)
    v = solve_resolvent_quadratic(ou, 1.0, lambda x: 0.9 * h(x), -2.0, 2.0, 21, 1e-8)
    return ou, u.f, v.f


class TestQuadruplication:
    def test_zero_functions_collapse_to_diagonal(self):
        ou = make_ou(1.0)
        pts = [StatePoint.of(v) for v in np.linspace(-1.0, 1.0, 11)]
        zero = GridFunction(pts, np.zeros(11))
        res = quadruplicate(ou, zero, zero, [10.0, 100.0], StatePoint.of(0.0))
        for state, rep in res.entries:
            assert rep.psi == 0.0
            assert state.pi == state.rho == state.mu == state.gamma

    def test_desk_case_trend_and_estimates(self, desk_case):
        ou, u, v = desk_case
        res = quadruplicate(ou, u, v, [10.0, 100.0, 1000.0], StatePoint.of(0.0))
        trend = res.trend()
        assert all(trend[i + 1] <= trend[i] + 1e-15 for i in range(2))
        assert trend[-1] <= 0.1 * trend[0]
        # weighted-gap bound: sup(u - v) <= Phi_alpha + C alpha^{-1/2}
        for _, rep in res.entries:
            assert res.sup_gap <= rep.phi + res.gap_constant / math.sqrt(rep.alpha) + 1e-12
        # the vanishing terms shrink along the schedule
        r1 = [abs(rep.key1_residual) for _, rep in res.entries]
        r2 = [abs(rep.key2_residual) for _, rep in res.entries]
        assert r1[0] / r1[1] >= 1.5 and r1[1] / r1[2] >= 1.5
        assert r2[0] / r2[1] >= 1.5 and r2[1] / r2[2] >= 1.5

    def test_eps_rule_satisfies_selection_inequality(self, desk_case):
        ou, u, v = desk_case
        res = quadruplicate(ou, u, v, [10.0, 100.0], StatePoint.of(0.0))
        for state, rep in res.entries:
            assert 0.0 < state.eps_alpha < 1.0 / 3.0
            # Xi at the warm start obeys Xi + eps < 1/alpha by construction;
            # at the optimizer Xi is reported and finite
            assert rep.xi >= 0.0
            assert state.eps_alpha <= 1.0 / state.alpha

    def test_grid_cap_enforced(self):
        ou = make_ou(1.0)
        pts = [StatePoint.of(v) for v in np.linspace(-1.0, 1.0, 60)]
        zero = GridFunction(pts, np.zeros(60))
        with pytest.raises(UsageError, match="cap"):
            quadruplicate(ou, zero, zero, [10.0], StatePoint.of(0.0))

    def test_report_json_fields(self, desk_case, tmp_path):
        import json

        ou, u, v = desk_case
        res = quadruplicate(ou, u, v, [10.0], StatePoint.of(0.0))
        res.write_json(tmp_path / "quad.json")
        rows = json.loads((tmp_path / "quad.json").read_text())
        assert set(rows[0]) == {"alpha", "eps", "Phi", "Psi", "Xi", "alphaPsi",
                                "key1_residual", "key2_residual"}


class TestKeyEstimates:
    def test_diagonal_at_minimizer_is_trivial(self):
        ou = make_ou(1.0)
        from evikit.ekeland import QuadrupleState

        origin = StatePoint.of(0.0)
        q = QuadrupleState(origin, origin, origin, origin, alpha=100.0,
                           eps_alpha=0.01, nu0=origin, c1=1.0, c2=0.0)
        rep = verify_key_estimates(ou, q)
        assert rep["lhs1"] == 0.0 and rep["rhs1"] == 0.0
        assert rep["lhs2"] == 0.0 and rep["rhs2"] == 0.0

    def test_infinite_information_rejected(self):
        cir = make_cir(CirDescriptor(mu=1.0))
        from evikit.ekeland import QuadrupleState

        good, bad = StatePoint.of(1.0), StatePoint.of(0.0)
        q = QuadrupleState(good, bad, good, good, alpha=10.0, eps_alpha=0.01,
                           nu0=good, c1=1.0, c2=0.0)
        with pytest.raises(UsageError):
            verify_key_estimates(cir, q)


class TestJensen:
    def test_equal_points_trivial(self):
        ou = make_ou(1.0)
        p = StatePoint.of(0.5)
        assert jensen_distance_check(ou, [(p, p, p, p)]) <= 0.0

    def test_euclidean_samples(self):
        ou = make_ou(1.0)
        rng = np.random.default_rng(5)
        quads = [tuple(ou.sample_point(rng) for _ in range(4)) for _ in range(2000)]
        assert jensen_distance_check(ou, quads) <= 1e-12

    def test_cir_samples(self):
        cir = make_cir(CirDescriptor(mu=1.0))
        rng = np.random.default_rng(7)
        quads = [tuple(cir.sample_point(rng) for _ in range(4)) for _ in range(500)]
        assert jensen_distance_check(cir, quads) <= 1e-9

    def test_weights_out_of_range_rejected(self):
        ou = make_ou(1.0)
        p = StatePoint.of(0.0)
        with pytest.raises(UsageError):
            jensen_distance_check(ou, [(p, p, p, p)], eps_grid=(0.4,))

    @given(st.tuples(*[st.floats(min_value=-50, max_value=50) for _ in range(4)]),
           st.floats(min_value=0.01, max_value=0.33),
           st.floats(min_value=0.01, max_value=0.33))
    @settings(max_examples=300, deadline=None)
    def test_scalar_inequality_pointwise(self, vals, eps, eps_p):
        n1, n2, n3, n4 = vals
        lhs = (n1 - n4) ** 2 / (12.0 * (1.0 - eps_p))
        rhs = (0.5 * (n1 - n2) ** 2 / (1.0 - eps) + 0.5 * (n2 - n3) ** 2
               + 0.5 * (n3 - n4) ** 2 / (1.0 + eps))
        assert lhs <= rhs + 1e-9 * max(1.0, abs(rhs))
