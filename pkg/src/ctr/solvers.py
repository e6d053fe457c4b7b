"""Defender optimization under the three information regimes.

All three solvers enumerate the C(|V_spot|, h) exactly-h deployments and
score each by exact backward induction, which at desk scale replaces the
MILP formulation as the in-process solver (the MILP remains available as an
export artifact for external cross-checks; see ctr.milp). Ties between
deployments are broken toward the lexicographically smallest protected set.
"""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentOutOfRange, BudgetExceedsSpot, BudgetMismatch, DegenerateSample
from .graph import AttackGraph
from .mdp import (
    AttackMdp,
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
)
from .stepdist import StepDistribution
from .util import parallel_map, substream


@dataclass(frozen=True)
class DirichletParams:
    """Concentration per spot node, sample count, and stream seed."""

    alpha: dict
    K: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", dict(self.alpha))
        if self.K < 1:
            raise ArgumentOutOfRange(f"K must be >= 1, got {self.K}")
        for v, a in self.alpha.items():
            if not a > 0.0:
                raise ArgumentOutOfRange(f"alpha({v}) = {a} must be positive")

    @classmethod
    def uniform(cls, g: AttackGraph, K: int, seed: int = 0) -> "DirichletParams":
        return cls({v: 1.0 for v in sorted(g.spot)}, K, seed)

    @classmethod
    def concentrated(cls, g: AttackGraph, node: int, scale: float, K: int,
                     seed: int = 0) -> "DirichletParams":
        """Center mass tilted so the attacker perceives `node` as the least
        protected spot node (scale = total concentration M)."""
        if node not in g.spot:
            raise ArgumentOutOfRange(f"node {node} is not in V_spot")
        d = len(g.spot)
        base = 1.0 / d
        tilt = 0.2 * base
        center = {}
        for v in sorted(g.spot):
            if v == node:
                center[v] = base - tilt
            elif d > 1:
                center[v] = base + tilt / (d - 1)
        return cls({v: scale * p for v, p in center.items()}, K, seed)


@dataclass(frozen=True)
class RegimeSolution:
    """Solved deployment with the policy/policies it was scored against."""

    regime: str
    deployment: Deployment
    attacker_policy: tuple                  # one Policy, or K of them (Dirichlet)
    value: float
    value_table: tuple                      # ((protected node tuple, value), ...)
    K: int | None = None
    seed: int | None = None
    wall_ms: float = 0.0
    tie_states: int | None = None           # blind diagnostic: argmax ties

    def table_dict(self) -> dict:
        return {combo: val for combo, val in self.value_table}


def enumerate_deployments(g: AttackGraph, h: int) -> list:
    """All exactly-h protected sets in lexicographic node order."""
    if h < 1:
        raise BudgetMismatch(f"budget must be >= 1, got {h}")
    if h > len(g.spot):
        raise BudgetExceedsSpot(f"budget {h} exceeds |V_spot| = {len(g.spot)}")
    return [tuple(c) for c in itertools.combinations(sorted(g.spot), h)]


def _argmin_table(table):
    """Index of the strictly smallest value; earlier (lex smaller) wins ties."""
    best = 0
    for i in range(1, len(table)):
        if table[i][1] < table[best][1]:
            best = i
    return best


def solve_stackelberg(g: AttackGraph, dist: StepDistribution, h: int,
                      nu: InitialDistribution | None = None) -> RegimeSolution:
    """Minimize the best-responding attacker's success probability.

    Exact enumeration: every deployment is scored by the attacker's optimal
    value under the deterministic-detection kernel.
    """
    t0 = time.perf_counter()
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    base = build_mdp(g, dist)
    combos = enumerate_deployments(g, h)

    def score(combo):
        m = apply_deployment(base, Deployment(frozenset(combo), h))
        pol = best_response(m)
        return initial_value(m, pol.values, nu), pol

    scored = parallel_map(score, combos)
    table = tuple((combo, val) for combo, (val, _) in zip(combos, scored))
    i = _argmin_table(table)
    return RegimeSolution(
        regime="stackelberg",
        deployment=Deployment(frozenset(combos[i]), h),
        attacker_policy=(scored[i][1],),
        value=table[i][1],
        value_table=table,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )


def blind_belief(g: AttackGraph, h: int) -> BeliefVector:
    """Uniform marginal belief: every spot node protected w.p. h/|V_spot|."""
    if h > len(g.spot):
        raise BudgetExceedsSpot(f"budget {h} exceeds |V_spot| = {len(g.spot)}")
    p = h / len(g.spot)
    return BeliefVector({v: p for v in sorted(g.spot)})


def _argmax_tie_count(m: AttackMdp, pol: Policy) -> int:
    """Non-terminal states below the step horizon whose best action ties.

    States at counter cmax are excluded: there every action expires, so the
    tie is structural and says nothing about the policy's arbitrariness.
    """
    ties = 0
    K1 = m.cmax + 1
    for v in range(m.graph.n):
        if v in m.graph.targets or m.graph.out_degree(v) < 2:
            continue
        for c in range(m.cmax):
            w = (1.0 - m.q[v]) * m.alpha[c]
            vals = [w * pol.values[int(m.graph.edge_dst[e]) * K1 + c + 1]
                    for e in m.graph.out_edges(v)]
            top = max(vals)
            if sum(1 for x in vals if x == top) > 1:
                ties += 1
    return ties


def solve_blind(g: AttackGraph, dist: StepDistribution, h: int,
                nu: InitialDistribution | None = None) -> RegimeSolution:
    """Blind-attacker equilibrium.

    Step 1: the attacker best-responds to the uniform belief h/|V_spot|
    (deterministic tie-break). Step 2: the defender evaluates that fixed
    policy under every exactly-h deployment and keeps the minimizer.
    """
    t0 = time.perf_counter()
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    base = build_mdp(g, dist)
    belief_mdp = apply_belief(base, blind_belief(g, h))
    pol = best_response(belief_mdp)
    ties = _argmax_tie_count(belief_mdp, pol)
    combos = enumerate_deployments(g, h)

    def score(combo):
        m = apply_deployment(base, Deployment(frozenset(combo), h))
        return initial_value(m, evaluate_policy(m, pol), nu)

    vals = parallel_map(score, combos)
    table = tuple(zip(combos, vals))
    i = _argmin_table(table)
    return RegimeSolution(
        regime="blind",
        deployment=Deployment(frozenset(combos[i]), h),
        attacker_policy=(pol,),
        value=table[i][1],
        value_table=table,
        tie_states=ties,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )


def sample_dirichlet(params: DirichletParams, rng: np.random.Generator) -> BeliefVector:
    """One belief draw: normalized independent Gamma(alpha_i, 1) variates.

    Retries when the Gamma vector underflows to all zeros (possible for very
    small concentrations) and fails with DegenerateSample after 100 attempts.
    """
    nodes = sorted(params.alpha)
    shape = np.array([params.alpha[v] for v in nodes])
    for _ in range(100):
        y = rng.standard_gamma(shape)
        total = y.sum()
        if total > 0.0:
            return BeliefVector(dict(zip(nodes, (y / total).tolist())))
    raise DegenerateSample("all Gamma draws underflowed to zero 100 times")


def sample_policies(g: AttackGraph, dist: StepDistribution,
                    params: DirichletParams) -> tuple:
    """Best-response policy per sampled belief, one RNG substream per index."""
    base = build_mdp(g, dist)

    def one(k):
        belief = sample_dirichlet(params, substream(params.seed, k))
        return best_response(apply_belief(base, belief))

    return tuple(parallel_map(one, range(params.K)))


def solve_dirichlet(g: AttackGraph, dist: StepDistribution, h: int,
                    params: DirichletParams,
                    nu: InitialDistribution | None = None) -> RegimeSolution:
    """Minimize the Monte-Carlo average of realized sampled-belief values.

    Per-sample policies depend only on the sampled belief, so they are
    computed once and reused across every candidate deployment.
    """
    t0 = time.perf_counter()
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    missing = g.spot - set(params.alpha)
    if missing:
        raise ArgumentOutOfRange(f"alpha missing spot nodes: {sorted(missing)}")
    extra = set(params.alpha) - g.spot
    if extra:
        raise ArgumentOutOfRange(f"alpha has non-spot nodes: {sorted(extra)}")
    base = build_mdp(g, dist)
    policies = sample_policies(g, dist, params)
    combos = enumerate_deployments(g, h)

    def score(combo):
        m = apply_deployment(base, Deployment(frozenset(combo), h))
        vals = [initial_value(m, evaluate_policy(m, pol), nu) for pol in policies]
        return math.fsum(vals) / params.K

    vals = parallel_map(score, combos)
    table = tuple(zip(combos, vals))
    i = _argmin_table(table)
    return RegimeSolution(
        regime="dirichlet",
        deployment=Deployment(frozenset(combos[i]), h),
        attacker_policy=policies,
        value=table[i][1],
        value_table=table,
        K=params.K,
        seed=params.seed,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )


def hoeffding_sample_size(epsilon: float, delta: float) -> int:
    """Samples sufficient for |mean - expectation| <= epsilon w.p. >= 1-delta."""
    if not 0.0 < epsilon < 1.0:
        raise ArgumentOutOfRange(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ArgumentOutOfRange(f"delta must be in (0, 1), got {delta}")
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon * epsilon))


@dataclass(frozen=True)
class RegimeComparison:
    stackelberg: RegimeSolution
    blind: RegimeSolution
    dirichlet: RegimeSolution
    heuristics: tuple = ()
    dirichlet_gap: float = field(init=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(
            self, "dirichlet_gap", self.dirichlet.value - self.stackelberg.value
        )


def compare_regimes(g: AttackGraph, dist: StepDistribution, h: int,
                    params: DirichletParams,
                    nu: InitialDistribution | None = None,
                    heuristic_trials: int = 30,
                    heuristic_seed: int = 0) -> RegimeComparison:
    """All three solvers plus the baseline heuristics on identical inputs."""
    from .heuristics import evaluate_heuristic

    nu = nu if nu is not None else InitialDistribution.uniform(g)
    reports = tuple(
        evaluate_heuristic(g, dist, h, name, attacker_model="stackelberg",
                           trials=heuristic_trials, seed=heuristic_seed, nu=nu)
        for name in ("shortest-path", "random")
    )
    return RegimeComparison(
        stackelberg=solve_stackelberg(g, dist, h, nu),
        blind=solve_blind(g, dist, h, nu),
        dirichlet=solve_dirichlet(g, dist, h, params, nu),
        heuristics=reports,
    )
