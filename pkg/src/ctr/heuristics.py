"""Baseline defender strategies: shortest-path protection and random placement.

These are the uninformed benchmarks the regime-optimal deployments are
compared against. Since the optimal solvers minimize over every exactly-h
deployment, any heuristic deployment scores at least as high for the
defender's loss, which the test suite checks exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceedsSpot, BudgetMismatch
from .graph import AttackGraph, distance_to_targets
from .mdp import (
    Deployment,
    InitialDistribution,
    apply_belief,
    apply_deployment,
    best_response,
    build_mdp,
    evaluate_policy,
    initial_value,
)
from .stepdist import StepDistribution


@dataclass(frozen=True)
class HeuristicReport:
    heuristic: str
    attacker_model: str
    deployments: tuple            # one per trial
    values: tuple                 # realized attacker success per trial
    mean: float
    std: float
    trials: int
    seed: int | None


def _check_budget(g: AttackGraph, h: int) -> None:
    if h < 1:
        raise BudgetMismatch(f"budget must be >= 1, got {h}")
    if h > len(g.spot):
        raise BudgetExceedsSpot(f"budget {h} exceeds |V_spot| = {len(g.spot)}")


def _shortest_path_frequencies(g: AttackGraph) -> dict:
    """freq[v] = number of shortest entry-to-target paths containing v.

    For each entry the relevant paths are those reaching the nearest target
    (minimum over the whole target set). Counted by the sigma-product
    decomposition, so redundant path families do not blow up.
    """
    per_target = {}
    for t in sorted(g.targets):
        pred = [[] for _ in range(g.n)]
        for src, dst in g.edges:
            pred[dst].append(src)
        dist = {t: 0}
        sigma = {t: 1}
        frontier = [t]
        while frontier:
            nxt = []
            for v in frontier:
                for w in pred[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        sigma[w] = 0
                        nxt.append(w)
                    if dist[w] == dist[v] + 1:
                        sigma[w] += sigma[v]
            frontier = nxt
        per_target[t] = (dist, sigma)

    freq = {v: 0 for v in range(g.n)}
    for entry in sorted(g.entries):
        dist_e = {entry: 0}
        sigma_e = {entry: 1}
        frontier = [entry]
        while frontier:
            nxt = []
            for v in frontier:
                for u in g.successors(v):
                    if u not in dist_e:
                        dist_e[u] = dist_e[v] + 1
                        sigma_e[u] = 0
                        nxt.append(u)
                    if dist_e[u] == dist_e[v] + 1:
                        sigma_e[u] += sigma_e[v]
            frontier = nxt
        reachable = [t for t in g.targets if t in dist_e]
        if not reachable:
            continue
        d_star = min(dist_e[t] for t in reachable)
        for t in reachable:
            if dist_e[t] != d_star:
                continue
            dist_t, sigma_t = per_target[t]
            for v in dist_e:
                if v in dist_t and dist_e[v] + dist_t[v] == d_star:
                    freq[v] += sigma_e[v] * sigma_t[v]
    return freq


def shortest_path_defense(g: AttackGraph, h: int) -> Deployment:
    """Protect the h spot nodes most frequent on shortest entry-target paths.

    Ranking: shortest-path frequency, then fewer hops to the nearest target,
    then lower node id. Nodes off every shortest path (frequency 0) are thus
    ranked purely by proximity to the targets.
    """
    _check_budget(g, h)
    freq = _shortest_path_frequencies(g)
    hops = distance_to_targets(g)
    far = g.n + 1

    def rank(v):
        return (-freq[v], hops[v] if hops[v] is not None else far, v)

    chosen = sorted(g.spot, key=rank)[:h]
    return Deployment(frozenset(chosen), h)


def random_defense(g: AttackGraph, h: int, seed) -> Deployment:
    """Uniform exactly-h subset of V_spot (shuffle prefix), reproducible."""
    _check_budget(g, h)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(sorted(g.spot))
    return Deployment(frozenset(int(v) for v in perm[:h]), h)


def evaluate_heuristic(g: AttackGraph, dist: StepDistribution, h: int,
                       heuristic: str, attacker_model: str = "stackelberg",
                       trials: int = 1, seed: int = 0,
                       dirichlet=None,
                       nu: InitialDistribution | None = None) -> HeuristicReport:
    """Realized attacker success against a heuristic deployment.

    The attacker responds per `attacker_model`: a best response to the
    realized deployment (stackelberg), the fixed uniform-belief policy
    (blind), or the average over sampled-belief policies (dirichlet, which
    requires DirichletParams). The random heuristic redraws its deployment
    over `trials` seeded trials; the others are deterministic.
    """
    from .solvers import blind_belief, sample_policies

    _check_budget(g, h)
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    base = build_mdp(g, dist)

    if heuristic == "shortest-path":
        deployments = [shortest_path_defense(g, h)]
        used_seed = None
    elif heuristic == "random":
        if trials < 1:
            raise ValueError("trials must be >= 1")
        deployments = [
            random_defense(g, h, np.random.SeedSequence(seed, spawn_key=(t,)))
            for t in range(trials)
        ]
        used_seed = seed
    else:
        raise ValueError(f"unknown heuristic {heuristic!r}")

    if attacker_model == "blind":
        fixed = [best_response(apply_belief(base, blind_belief(g, h)))]
    elif attacker_model == "dirichlet":
        if dirichlet is None:
            raise ValueError("dirichlet attacker model requires DirichletParams")
        fixed = list(sample_policies(g, dist, dirichlet))
    elif attacker_model != "stackelberg":
        raise ValueError(f"unknown attacker model {attacker_model!r}")

    values = []
    for x in deployments:
        m = apply_deployment(base, x)
        if attacker_model == "stackelberg":
            values.append(initial_value(m, best_response(m).values, nu))
        else:
            vals = [initial_value(m, evaluate_policy(m, pol), nu) for pol in fixed]
            values.append(sum(vals) / len(vals))

    arr = np.array(values)
    return HeuristicReport(
        heuristic=heuristic,
        attacker_model=attacker_model,
        deployments=tuple(tuple(sorted(x.protected)) for x in deployments),
        values=tuple(values),
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)) if len(values) > 1 else 0.0,
        trials=len(deployments),
        seed=used_seed,
    )
