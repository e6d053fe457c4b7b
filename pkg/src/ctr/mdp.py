"""The attacker's MDP over (node, steps-taken) states.

States are At(v, c) for every node v and step counter c in 0..cmax, plus two
absorbing slots: sink (detected, value 0) and expired (out of time, value 0).
From At(v, c) an action along edge (v, u) advances to At(u, c+1) with the
conditional probability alpha_c = Pr(N >= c+1 | N >= c) and otherwise
expires. Occupying a node with detection mass q(v) diverts to the sink with
probability q(v) first; the deployment kernel is the q in {0,1} special case
of the belief kernel, and the base kernel is q = 0.

Backward induction over decreasing step counters is exact here: every
transition increases c, terminates at a target, or is absorbed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BudgetMismatch, InvalidPath, UndefinedAction
from .graph import AttackGraph, longest_path_bound
from .stepdist import StepDistribution


@dataclass(frozen=True)
class Deployment:
    """Pure defender strategy: exactly h protected nodes within V_spot."""

    protected: frozenset
    h: int

    def __post_init__(self):
        object.__setattr__(self, "protected", frozenset(self.protected))
        if self.h < 1:
            raise BudgetMismatch(f"budget must be >= 1, got {self.h}")
        if len(self.protected) != self.h:
            raise BudgetMismatch(
                f"deployment has {len(self.protected)} nodes but budget h = {self.h}"
            )


@dataclass(frozen=True)
class BeliefVector:
    """Perceived detection probability per spot node (others implicitly 0)."""

    q: dict

    def __post_init__(self):
        object.__setattr__(self, "q", dict(self.q))
        for v, p in self.q.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"belief q({v}) = {p} outside [0, 1]")

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for v, p in self.q.items():
            out[v] = p
        return out


@dataclass(frozen=True)
class InitialDistribution:
    """Clone-start weights over nodes (the At(v, 0) states)."""

    weights: dict

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))
        total = 0.0
        for v, w in self.weights.items():
            if w < 0.0:
                raise ValueError(f"weight of node {v} is negative")
            total += w
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total}, expected 1")

    @classmethod
    def uniform(cls, g: AttackGraph) -> "InitialDistribution":
        nodes = sorted(set(range(g.n)) - g.targets)
        if not nodes:
            raise ValueError("no non-target nodes to start from")
        return cls({v: 1.0 / len(nodes) for v in nodes})

    @classmethod
    def point_mass(cls, v: int) -> "InitialDistribution":
        return cls({v: 1.0})


@dataclass(frozen=True)
class Policy:
    """Chosen out-edge per state (global edge index, -1 = none) and values."""

    edges: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.edges.setflags(write=False)
        self.values.setflags(write=False)

    def chosen_successor(self, mdp: "AttackMdp", v: int, c: int) -> int | None:
        e = int(self.edges[mdp.state_index(v, c)])
        return None if e < 0 else int(mdp.graph.edge_dst[e])


@dataclass(frozen=True)
class AttackMdp:
    """Immutable MDP instance; kernel mode is fixed at construction."""

    graph: AttackGraph
    dist: StepDistribution
    cmax: int
    mode: str                                  # "base" | "deployment" | "belief"
    q: np.ndarray = field(repr=False)          # detection mass per node
    alpha: np.ndarray = field(repr=False)      # advance probability per counter
    deployment: Deployment | None = None

    def __post_init__(self):
        self.q.setflags(write=False)
        self.alpha.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.graph.n * (self.cmax + 1) + 2

    @property
    def sink_index(self) -> int:
        return self.n_states - 2

    @property
    def expired_index(self) -> int:
        return self.n_states - 1

    def state_index(self, v: int, c: int) -> int:
        if not (0 <= v < self.graph.n and 0 <= c <= self.cmax):
            raise IndexError(f"no state for node {v}, counter {c}")
        return v * (self.cmax + 1) + c

    def state_of(self, s: int):
        """('at', v, c) for position states, ('sink',) or ('expired',)."""
        if s == self.sink_index:
            return ("sink",)
        if s == self.expired_index:
            return ("expired",)
        return ("at", s // (self.cmax + 1), s % (self.cmax + 1))

    def is_terminal(self, s: int) -> bool:
        kind = self.state_of(s)
        return kind[0] != "at" or kind[1] in self.graph.targets

    def actions(self, s: int) -> range:
        if self.is_terminal(s):
            return range(0)
        return self.graph.out_edges(self.state_of(s)[1])

    def transition_row(self, s: int, edge: int) -> list:
        """Successor (state, probability) pairs for taking `edge` in state s.

        Zero-probability successors are omitted; the row always sums to 1 up
        to rounding. Used by the MILP export and the stochasticity tests; the
        induction kernels evaluate the same kernel in closed form.
        """
        if self.is_terminal(s):
            raise UndefinedAction(f"state {self.state_of(s)} is terminal")
        _, v, c = self.state_of(s)
        if edge not in self.graph.out_edges(v):
            raise UndefinedAction(f"edge {edge} does not leave node {v}")
        qv = float(self.q[v])
        row = []
        if qv > 0.0:
            row.append((self.sink_index, qv))
        stay = 1.0 - qv
        if stay > 0.0:
            ac = float(self.alpha[c]) if c < self.cmax else 0.0
            u = int(self.graph.edge_dst[edge])
            if ac > 0.0:
                row.append((self.state_index(u, c + 1), stay * ac))
            if ac < 1.0:
                row.append((self.expired_index, stay * (1.0 - ac)))
        return row


def _advance_probabilities(dist: StepDistribution, cmax: int) -> np.ndarray:
    """alpha[c] for c in 0..cmax; counters past the zero-mass horizon get 0."""
    alpha = np.zeros(cmax + 1)
    for c in range(cmax):
        alpha[c] = dist.conditional_advance(c) if dist.survival(c) > 0.0 else 0.0
    return alpha


def build_mdp(g: AttackGraph, dist: StepDistribution) -> AttackMdp:
    """Base-kernel MDP: movement gated only by the step-budget law."""
    cmax = longest_path_bound(g)
    return AttackMdp(
        graph=g,
        dist=dist,
        cmax=cmax,
        mode="base",
        q=np.zeros(g.n),
        alpha=_advance_probabilities(dist, cmax),
    )


def apply_deployment(m: AttackMdp, x: Deployment) -> AttackMdp:
    """Deterministic-detection kernel: occupying a protected node sinks."""
    if m.mode != "base":
        raise ValueError(f"expected a base-kernel MDP, got mode {m.mode!r}")
    if len(x.protected) != x.h:
        raise BudgetMismatch(f"deployment size {len(x.protected)} != budget {x.h}")
    outside = x.protected - m.graph.spot
    if outside:
        raise ValueError(f"protected nodes outside V_spot: {sorted(outside)}")
    q = np.zeros(m.graph.n)
    q[sorted(x.protected)] = 1.0
    return AttackMdp(graph=m.graph, dist=m.dist, cmax=m.cmax, mode="deployment",
                     q=q, alpha=m.alpha, deployment=x)


def apply_belief(m: AttackMdp, belief: BeliefVector) -> AttackMdp:
    """Perceived-detection kernel: occupying v sinks with probability q(v)."""
    if m.mode != "base":
        raise ValueError(f"expected a base-kernel MDP, got mode {m.mode!r}")
    outside = set(belief.q) - m.graph.spot
    if outside:
        raise ValueError(f"belief nodes outside V_spot: {sorted(outside)}")
    return AttackMdp(graph=m.graph, dist=m.dist, cmax=m.cmax, mode="belief",
                     q=belief.dense(m.graph.n), alpha=m.alpha)


def _target_mask(g: AttackGraph) -> np.ndarray:
    mask = np.zeros(g.n, dtype=np.uint8)
    mask[sorted(g.targets)] = 1
    return mask


def best_response(m: AttackMdp) -> Policy:
    """Exact optimal attacker policy by backward induction.

    Argmax ties are broken toward the lowest (src, dst) out-edge, so the
    result is deterministic.
    """
    values = np.zeros(m.n_states)
    edges = np.full(m.n_states, -1, dtype=np.int64)
    kernels.best_response_kernel(
        m.graph.indptr, m.graph.edge_dst, _target_mask(m.graph),
        m.alpha, m.q, m.cmax, values, edges,
    )
    return Policy(edges=edges, values=values)


def evaluate_policy(m: AttackMdp, pi: Policy) -> np.ndarray:
    """Value of the fixed policy `pi` under m's kernel.

    The policy may have been computed under a different kernel (that is the
    whole point of the blind and Dirichlet evaluations). States whose
    on-policy play is undefined evaluate to NaN; combining such a state with
    positive initial weight raises UndefinedAction in initial_value.
    """
    edges = np.asarray(pi.edges, dtype=np.int64)
    if edges.shape != (m.n_states,):
        raise UndefinedAction(
            f"policy covers {edges.shape[0]} states, MDP has {m.n_states}"
        )
    K = m.cmax + 1
    nodes = np.arange(m.graph.n).repeat(K)
    chosen = edges[: m.graph.n * K]
    defined = chosen >= 0
    legal = (chosen[defined] >= m.graph.indptr[nodes[defined]]) & (
        chosen[defined] < m.graph.indptr[nodes[defined] + 1]
    )
    if not legal.all():
        bad = np.flatnonzero(defined)[~legal][0]
        raise UndefinedAction(
            f"policy action {int(edges[bad])} is not an out-edge of node {int(nodes[bad])}"
        )
    values = np.zeros(m.n_states)
    kernels.policy_eval_kernel(
        m.graph.indptr, m.graph.edge_dst, _target_mask(m.graph),
        m.alpha, m.q, m.cmax, edges, values,
    )
    return values


def initial_value(m: AttackMdp, values: np.ndarray, nu: InitialDistribution) -> float:
    """nu-weighted success probability; clones start at At(v, 0)."""
    total = 0.0
    for v in sorted(nu.weights):
        w = nu.weights[v]
        if w == 0.0:
            continue
        val = float(values[m.state_index(v, 0)])
        if math.isnan(val):
            raise UndefinedAction(
                f"policy is undefined along play from node {v} (weight {w})"
            )
        total += w * val
    return total


def path_policy(m: AttackMdp, path: list) -> Policy:
    """Partial policy forcing `path`: At(path[i], i) plays the path edge.

    Every other state is left undefined (edge -1). Evaluating it from
    At(path[0], 0) yields the path value; see path_value_oracle for the
    closed form it must reproduce.
    """
    _validate_path(m.graph, path)
    edges = np.full(m.n_states, -1, dtype=np.int64)
    for i in range(len(path) - 1):
        v, u = path[i], path[i + 1]
        for e in m.graph.out_edges(v):
            if int(m.graph.edge_dst[e]) == u:
                edges[m.state_index(v, i)] = e
                break
    values = evaluate_policy(m, Policy(edges=edges, values=np.zeros(m.n_states)))
    return Policy(edges=edges, values=values)


def _validate_path(g: AttackGraph, path: list) -> None:
    if not path:
        raise InvalidPath("empty path")
    if len(set(path)) != len(path):
        raise InvalidPath("path repeats a node")
    for v in path:
        if not 0 <= v < g.n:
            raise InvalidPath(f"unknown node {v}")
    for v, u in zip(path, path[1:]):
        if u not in g.successors(v):
            raise InvalidPath(f"({v}, {u}) is not an edge")
    if path[-1] not in g.targets:
        raise InvalidPath(f"path ends at non-target node {path[-1]}")


def path_value_oracle(g: AttackGraph, dist: StepDistribution, path: list) -> float:
    """Closed-form value of committing to `path`: Pr(N >= edge count).

    The telescoping product of conditional advance probabilities along a
    path collapses to the survival function at its length, which makes this
    an independent oracle for the induction kernels.
    """
    _validate_path(g, path)
    return dist.survival(len(path) - 1)
