"""Attack MDP: kernels, best response, policy evaluation, path oracle."""

import math

import numpy as np
import pytest

from conftest import random_distribution, random_graph

from ctr.demo import demo_distribution, demo_graph
from ctr.errors import BudgetMismatch, InvalidPath, UndefinedAction
from ctr.graph import enumerate_paths, parse_graph
from ctr.mdp import (
    BeliefVector,
    Deployment,
    InitialDistribution,
    Policy,
    apply_belief,
    apply_deployment,
    best_response,
    build_mdp,
    evaluate_policy,
    initial_value,
    path_policy,
    path_value_oracle,
)
from ctr.stepdist import geometric_from_rates

A, B, C, D, E, T = range(6)


def demo_mdp():
    return build_mdp(demo_graph(), demo_distribution())


def single_edge_mdp(lam=2.0, lam_d=1.0):
    doc = {
        "nodes": [{"id": 0, "label": "A"}, {"id": 1, "label": "T"}],
        "edges": [[0, 1]],
        "entries": [0],
        "targets": [1],
        "spot": [0],
    }
    g = parse_graph(doc)
    return g, build_mdp(g, geometric_from_rates(lam, lam_d))


def all_rows(m):
    for s in range(m.n_states):
        if m.is_terminal(s):
            continue
        for e in m.actions(s):
            yield s, e, m.transition_row(s, e)


class TestKernelConstruction:
    def test_demo_first_hop_is_certain(self):
        m = demo_mdp()
        row = dict(m.transition_row(m.state_index(A, 0), 0))
        assert row[m.state_index(B, 1)] == pytest.approx(1.0)

    def test_geometric_advance_constant(self):
        g, m = single_edge_mdp()
        assert np.allclose(m.alpha[: m.cmax], 2.0 / 3.0)
        gd = demo_graph()
        mg = build_mdp(gd, geometric_from_rates(2.0, 1.0))
        for c in range(mg.cmax):
            assert mg.alpha[c] == mg.alpha[0]

    @pytest.mark.parametrize("mode", ["base", "deployment", "belief"])
    def test_rows_are_stochastic(self, mode):
        rng = np.random.default_rng(21)
        for _ in range(20):
            g = random_graph(rng)
            m = build_mdp(g, random_distribution(rng))
            if mode == "deployment":
                v = sorted(g.spot)[0]
                m = apply_deployment(m, Deployment(frozenset({v}), 1))
            elif mode == "belief":
                q = {v: float(rng.uniform(0, 1)) for v in g.spot}
                m = apply_belief(m, BeliefVector(q))
            for _, _, row in all_rows(m):
                total = sum(p for _, p in row)
                assert abs(total - 1.0) <= 1e-12
                assert all(p > 0.0 for _, p in row)

    def test_values_match_row_recursion(self):
        # the closed-form kernel inside best_response agrees with the
        # explicit transition rows
        rng = np.random.default_rng(33)
        for _ in range(10):
            g = random_graph(rng)
            m = build_mdp(g, random_distribution(rng))
            q = {v: float(rng.uniform(0, 1)) for v in g.spot}
            mb = apply_belief(m, BeliefVector(q))
            pol = best_response(mb)
            vals = pol.values
            for s in range(mb.n_states):
                if mb.is_terminal(s):
                    continue
                best = 0.0
                if list(mb.actions(s)):
                    best = max(
                        sum(p * vals[sp] for sp, p in mb.transition_row(s, e))
                        for e in mb.actions(s)
                    )
                assert vals[s] == pytest.approx(best, abs=1e-12)


class TestDeployment:
    def test_protected_state_sinks(self):
        m = demo_mdp()
        md = apply_deployment(m, Deployment(frozenset({B}), 1))
        row = md.transition_row(md.state_index(B, 1), 3)
        assert row == [(md.sink_index, 1.0)]

    def test_budget_mismatch(self):
        with pytest.raises(BudgetMismatch):
            Deployment(frozenset({B, C}), 1)
        with pytest.raises(BudgetMismatch):
            Deployment(frozenset(), 0)

    def test_protecting_d_leaves_b_route(self):
        m = demo_mdp()
        md = apply_deployment(m, Deployment(frozenset({D}), 1))
        pol = best_response(md)
        assert pol.values[md.state_index(A, 0)] == pytest.approx(0.80, abs=1e-12)

    def test_deployment_outside_spot_rejected(self):
        m = demo_mdp()
        with pytest.raises(ValueError):
            apply_deployment(m, Deployment(frozenset({A}), 1))

    def test_deployment_equals_indicator_belief(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            g = random_graph(rng)
            dist = random_distribution(rng)
            base = build_mdp(g, dist)
            spot = sorted(g.spot)
            h = int(rng.integers(1, len(spot) + 1))
            chosen = frozenset(int(v) for v in rng.choice(spot, h, replace=False))
            md = apply_deployment(base, Deployment(chosen, h))
            mb = apply_belief(base, BeliefVector({v: 1.0 for v in chosen}))
            assert np.array_equal(best_response(md).values, best_response(mb).values)


class TestBelief:
    def test_quarter_belief_value_at_b(self):
        m = demo_mdp()
        mb = apply_belief(m, BeliefVector({B: 0.25}))
        pol = best_response(mb)
        assert pol.values[mb.state_index(B, 1)] == pytest.approx(0.60, abs=1e-12)

    def test_zero_belief_is_base(self):
        m = demo_mdp()
        mb = apply_belief(m, BeliefVector({v: 0.0 for v in (B, C, D, E)}))
        assert np.array_equal(best_response(mb).values, best_response(m).values)

    def test_certain_belief_sinks(self):
        m = demo_mdp()
        mb = apply_belief(m, BeliefVector({B: 1.0}))
        row = mb.transition_row(mb.state_index(B, 1), 3)
        assert row == [(mb.sink_index, 1.0)]

    def test_belief_outside_unit_interval(self):
        with pytest.raises(ValueError):
            BeliefVector({B: 1.5})

    def test_monotone_in_belief(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            g = random_graph(rng)
            base = build_mdp(g, random_distribution(rng))
            q = {v: float(rng.uniform(0, 0.8)) for v in g.spot}
            v_pick = int(rng.choice(sorted(g.spot)))
            bumped = dict(q)
            bumped[v_pick] = min(1.0, q[v_pick] + float(rng.uniform(0, 0.2)))
            low = best_response(apply_belief(base, BeliefVector(q))).values
            high = best_response(apply_belief(base, BeliefVector(bumped))).values
            assert (high <= low + 1e-15).all()


class TestBestResponse:
    def test_demo_base_value_and_tiebreak(self):
        m = demo_mdp()
        pol = best_response(m)
        assert pol.values[m.state_index(A, 0)] == pytest.approx(0.80, abs=1e-12)
        assert pol.chosen_successor(m, A, 0) == B

    def test_demo_quarter_belief(self):
        m = demo_mdp()
        mb = apply_belief(m, BeliefVector({v: 0.25 for v in (B, C, D, E)}))
        pol = best_response(mb)
        assert pol.values[mb.state_index(A, 0)] == pytest.approx(0.60, abs=1e-12)
        assert pol.chosen_successor(mb, A, 0) == B

    def test_single_edge_matches_oracle(self):
        g, m = single_edge_mdp()
        pol = best_response(m)
        assert pol.values[m.state_index(0, 0)] == path_value_oracle(
            g, m.dist, [0, 1])

    def test_dominates_every_policy(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            g = random_graph(rng)
            base = build_mdp(g, random_distribution(rng))
            q = {v: float(rng.uniform(0, 1)) for v in g.spot}
            m = apply_belief(base, BeliefVector(q))
            star = best_response(m)
            edges = np.full(m.n_states, -1, dtype=np.int64)
            for v in range(g.n):
                if v in g.targets or g.out_degree(v) == 0:
                    continue
                for c in range(m.cmax + 1):
                    lo, hi = g.indptr[v], g.indptr[v + 1]
                    edges[m.state_index(v, c)] = int(rng.integers(lo, hi))
            vals = evaluate_policy(m, Policy(edges=edges, values=np.zeros(1)))
            assert (vals <= star.values).all()


class TestEvaluatePolicy:
    def test_blind_policy_under_protection(self):
        m = demo_mdp()
        pol = path_policy(m, [A, B, T])
        md = apply_deployment(m, Deployment(frozenset({B}), 1))
        vals = evaluate_policy(md, pol)
        assert vals[md.state_index(A, 0)] == 0.0

    def test_c_route_survives_b_protection(self):
        m = demo_mdp()
        pol = path_policy(m, [A, C, T])
        md = apply_deployment(m, Deployment(frozenset({B}), 1))
        vals = evaluate_policy(md, pol)
        assert vals[md.state_index(A, 0)] == pytest.approx(0.80, abs=1e-12)

    def test_self_consistency(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            g = random_graph(rng)
            m = build_mdp(g, random_distribution(rng))
            pol = best_response(m)
            assert np.array_equal(evaluate_policy(m, pol), pol.values)

    def test_foreign_edge_rejected(self):
        m = demo_mdp()
        edges = np.full(m.n_states, -1, dtype=np.int64)
        edges[m.state_index(B, 1)] = 0  # edge 0 leaves A, not B
        with pytest.raises(UndefinedAction):
            evaluate_policy(m, Policy(edges=edges, values=np.zeros(1)))

    def test_undefined_reachable_state_raises_in_initial_value(self):
        m = demo_mdp()
        pol = path_policy(m, [A, B, T])   # undefined at C, D, E clones
        vals = evaluate_policy(m, pol)
        assert math.isnan(vals[m.state_index(C, 0)])
        with pytest.raises(UndefinedAction):
            initial_value(m, vals, InitialDistribution.uniform(m.graph))
        # point mass on the covered start is fine
        got = initial_value(m, vals, InitialDistribution.point_mass(A))
        assert got == pytest.approx(0.80, abs=1e-12)


class TestInitialValue:
    def test_point_mass(self):
        m = demo_mdp()
        pol = best_response(m)
        nu = InitialDistribution.point_mass(A)
        assert initial_value(m, pol.values, nu) == pytest.approx(0.80, abs=1e-12)

    def test_uniform_is_mean_of_clones(self):
        m = demo_mdp()
        pol = best_response(m)
        nu = InitialDistribution.uniform(m.graph)
        per_clone = [pol.values[m.state_index(v, 0)] for v in (A, B, C, D, E)]
        assert initial_value(m, pol.values, nu) == pytest.approx(
            sum(per_clone) / 5.0, abs=1e-12)

    def test_target_start_counts_fully(self):
        m = demo_mdp()
        pol = best_response(m)
        nu = InitialDistribution({T: 0.5, A: 0.5})
        got = initial_value(m, pol.values, nu)
        assert got == pytest.approx(0.5 * 1.0 + 0.5 * 0.80, abs=1e-12)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            InitialDistribution({0: 0.5})
        with pytest.raises(ValueError):
            InitialDistribution({0: -0.5, 1: 1.5})


class TestPathOracle:
    def test_demo_paths(self):
        g, dist = demo_graph(), demo_distribution()
        assert path_value_oracle(g, dist, [A, B, T]) == pytest.approx(0.80)
        assert path_value_oracle(g, dist, [A, D, E, T]) == pytest.approx(0.35)
        assert path_value_oracle(g, dist, [T]) == 1.0

    @pytest.mark.parametrize("path", [
        [],                    # empty
        [A, B],                # does not end at a target
        [A, T],                # not an edge
        [A, B, T, T],          # repeats
    ])
    def test_invalid_paths(self, path):
        with pytest.raises(InvalidPath):
            path_value_oracle(demo_graph(), demo_distribution(), path)

    def test_lemma_equivalence_battery(self):
        # forced-path value through the MDP equals the survival closed form
        rng = np.random.default_rng(101)
        checked = 0
        for _ in range(40):
            g = random_graph(rng, max_nodes=8)
            dist = random_distribution(rng)
            m = build_mdp(g, dist)
            for v in range(g.n):
                if v in g.targets:
                    continue
                for path in enumerate_paths(g, v):
                    pol = path_policy(m, path)
                    got = pol.values[m.state_index(path[0], 0)]
                    want = path_value_oracle(g, dist, path)
                    assert abs(got - want) <= 1e-12
                    checked += 1
        assert checked > 100
