"""Shared generators and oracles for the test suite."""

import math

import numpy as np
import pytest

from ctr.graph import parse_graph
from ctr.stepdist import ExplicitSurvival, geometric_from_rates


def random_dag_document(rng, max_nodes=10, edge_prob=None):
    """Random acyclic graph document: targets are exactly the sink nodes, so
    every node reaches a target (keeps parsing warning-free)."""
    n = int(rng.integers(2, max_nodes + 1))
    p = float(edge_prob) if edge_prob is not None else float(rng.uniform(0.25, 0.55))
    edges = [[i, j] for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if not edges:
        edges = [[0, n - 1]]
    has_out = {i for i, _ in edges}
    targets = [v for v in range(n) if v not in has_out]
    non_targets = [v for v in range(n) if v in has_out]
    k = int(rng.integers(1, len(non_targets) + 1))
    spot = sorted(int(v) for v in rng.choice(non_targets, size=k, replace=False))
    n_entries = int(rng.integers(1, min(2, len(non_targets)) + 1))
    entries = sorted(int(v) for v in rng.choice(non_targets, size=n_entries,
                                                replace=False))
    return {
        "nodes": [{"id": v} for v in range(n)],
        "edges": edges,
        "entries": entries,
        "targets": targets,
        "spot": spot,
    }


def random_graph(rng, max_nodes=10, min_spot=1, edge_prob=None):
    while True:
        g = parse_graph(random_dag_document(rng, max_nodes, edge_prob))
        if len(g.spot) >= min_spot:
            return g


def random_distribution(rng):
    if rng.random() < 0.5:
        return geometric_from_rates(float(rng.uniform(0.5, 3.0)),
                                    float(rng.uniform(0.5, 3.0)))
    length = int(rng.integers(2, 7))
    vals = np.sort(rng.uniform(0.0, 1.0, size=length - 1))[::-1]
    return ExplicitSurvival((1.0, *[float(v) for v in vals]), tail=0.0)


def all_paths_between(g, s, t):
    """Every simple path s -> t (DAG, so plain DFS terminates)."""
    out = []
    path = [s]

    def walk(v):
        if v == t:
            out.append(list(path))
            return
        for u in g.successors(v):
            path.append(u)
            walk(u)
            path.pop()

    walk(s)
    return out


def brute_force_betweenness(g):
    """O(n^3)-ish pairwise shortest-path enumeration; endpoints excluded,
    normalized by (n-1)(n-2)."""
    n = g.n
    score = [0.0] * n
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            paths = all_paths_between(g, s, t)
            if not paths:
                continue
            shortest = min(len(p) for p in paths)
            sp = [p for p in paths if len(p) == shortest]
            for v in range(n):
                if v == s or v == t:
                    continue
                through = sum(1 for p in sp if v in p)
                score[v] += through / len(sp)
    if n > 2:
        score = [x / ((n - 1) * (n - 2)) for x in score]
    return score


def two_proportion_z(s1, n1, s2, n2):
    pooled = (s1 + s2) / (n1 + n2)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        return 0.0
    return (s1 / n1 - s2 / n2) / se


@pytest.fixture
def demo_graph():
    from ctr.demo import demo_graph as make

    return make()


@pytest.fixture
def demo_dist():
    from ctr.demo import demo_distribution as make

    return make()
