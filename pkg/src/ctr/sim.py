"""Monte-Carlo validation of analytic values.

Two timing modes: "steps" draws the round's step budget N directly from the
step distribution; "continuous" draws the defender's return time from
Exp(lambda_defender) and fills the window with Poisson(lambda_attacker)
arrival events, one edge per event. The two agree in distribution, which is
exactly the mixture identity the geometric law is derived from, and the test
suite checks them against each other.

Determinism: trial i consumes row i of a (trials, width) uniform block drawn
from the seeded generator, so its rollout is a pure function of (seed, i) and
never depends on the trial count or any parallel scheduling.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedAction
from .mdp import AttackMdp, Deployment, InitialDistribution, Policy
from .stepdist import Geometric, StepDistribution

_CHUNK = 1 << 16


@dataclass(frozen=True)
class RolloutOutcome:
    """Terminal event of one simulated round.

    kind: "success" | "detected" | "expired"; node is where the round ended;
    steps counts edges actually walked. budget is the drawn step budget in
    "steps" mode; in "continuous" mode it is the number of attack events
    realized before the round terminated.
    """

    kind: str
    node: int
    steps: int
    budget: int


@dataclass(frozen=True)
class SimEstimate:
    trials: int
    successes: int
    frequency: float
    stderr: float
    ci95: tuple

    @classmethod
    def from_counts(cls, successes: int, trials: int) -> "SimEstimate":
        f = successes / trials
        se = math.sqrt(f * (1.0 - f) / trials)
        lo = max(0.0, f - 1.96 * se)
        hi = min(1.0, f + 1.96 * se)
        return cls(trials=trials, successes=successes, frequency=f,
                   stderr=se, ci95=(lo, hi))


def _survival_ladder(dist: StepDistribution, cap: int) -> np.ndarray:
    """[S(1), ..., S(cap)]: the inverse-CDF ladder for drawing N."""
    return np.array([dist.survival(k) for k in range(1, cap + 1)])


def _invert_survival(ladder: np.ndarray, u: np.ndarray) -> np.ndarray:
    """N = max{n <= cap : S(n) > u}, vectorized; matches P(N >= n) = S(n)."""
    return np.searchsorted(-ladder, -u, side="left")


def _protected_set(x: Deployment | None) -> frozenset:
    return x.protected if x is not None else frozenset()


def _trajectory_profile(m: AttackMdp, protected: frozenset, pi: Policy,
                        start: int) -> tuple:
    """(kind, step) of the first terminal event on the forced trajectory.

    The policy fixes the whole walk, so the only randomness left in a round
    is whether the step budget covers the event step. kind "deadend" means
    the trajectory runs out of actions: such a round always expires.
    """
    v = start
    steps = 0
    if v in protected:
        return ("detected", 0)
    if v in m.graph.targets:
        return ("success", 0)
    while True:
        if steps >= m.cmax:
            return ("deadend", steps)
        e = int(pi.edges[m.state_index(v, steps)])
        if e < 0:
            if m.graph.out_degree(v) > 0:
                raise UndefinedAction(f"policy undefined at node {v}, step {steps}")
            return ("deadend", steps)
        v = int(m.graph.edge_dst[e])
        steps += 1
        if v in protected:
            return ("detected", steps)
        if v in m.graph.targets:
            return ("success", steps)


def _walk(m: AttackMdp, protected: frozenset, pi: Policy, start: int,
          budget: int) -> RolloutOutcome:
    """Walk up to `budget` edges following pi; literal counterpart of the
    profile classification above."""
    v = start
    steps = 0
    if v in protected:
        return RolloutOutcome("detected", v, 0, budget)
    if v in m.graph.targets:
        return RolloutOutcome("success", v, 0, budget)
    while steps < budget:
        if steps >= m.cmax:
            break
        e = int(pi.edges[m.state_index(v, steps)])
        if e < 0:
            if m.graph.out_degree(v) > 0:
                raise UndefinedAction(f"policy undefined at node {v}, step {steps}")
            break
        v = int(m.graph.edge_dst[e])
        steps += 1
        if v in protected:
            return RolloutOutcome("detected", v, steps, budget)
        if v in m.graph.targets:
            return RolloutOutcome("success", v, steps, budget)
    return RolloutOutcome("expired", v, steps, budget)


def _require_rates(dist: StepDistribution) -> tuple:
    if not isinstance(dist, Geometric):
        raise ValueError("continuous mode needs attacker/defender rates "
                         "(geometric step distribution)")
    return dist.lambda_attacker, dist.lambda_defender


def simulate_round(m: AttackMdp, x: Deployment | None, pi: Policy, start: int,
                   mode: str, rng: np.random.Generator) -> RolloutOutcome:
    """One rollout from `start` under deployment x and fixed policy pi.

    Detection is state-based, mirroring the deployment kernel: entering (or
    starting on) a protected node ends the round immediately.
    """
    protected = _protected_set(x)
    cap = m.cmax + 1
    if mode == "steps":
        ladder = _survival_ladder(m.dist, cap)
        budget = int(_invert_survival(ladder, np.array([rng.random()]))[0])
        return _walk(m, protected, pi, start, budget)
    if mode == "continuous":
        lam_a, lam_d = _require_rates(m.dist)
        window = -math.log1p(-rng.random()) / lam_d
        v = start
        steps = 0
        if v in protected:
            return RolloutOutcome("detected", v, 0, 0)
        if v in m.graph.targets:
            return RolloutOutcome("success", v, 0, 0)
        t = 0.0
        while True:
            t += -math.log1p(-rng.random()) / lam_a
            if not t < window or steps >= m.cmax:
                return RolloutOutcome("expired", v, steps, steps)
            e = int(pi.edges[m.state_index(v, steps)])
            if e < 0:
                if m.graph.out_degree(v) > 0:
                    raise UndefinedAction(
                        f"policy undefined at node {v}, step {steps}")
                return RolloutOutcome("expired", v, steps, steps)
            v = int(m.graph.edge_dst[e])
            steps += 1
            if v in protected:
                return RolloutOutcome("detected", v, steps, steps)
            if v in m.graph.targets:
                return RolloutOutcome("success", v, steps, steps)
    raise ValueError(f"unknown mode {mode!r}")


def sample_step_counts(dist: StepDistribution, mode: str, trials: int, seed: int,
                       cap: int) -> np.ndarray:
    """Per-round step budgets, capped at `cap` (the cap bin absorbs the tail).

    "steps" inverts the survival function; "continuous" realizes the timing
    race literally, so its histogram is an executable check of the mixture
    identity behind the geometric law.
    """
    rng = np.random.default_rng(seed)
    out = np.empty(trials, dtype=np.int64)
    if mode == "steps":
        ladder = _survival_ladder(dist, cap)
        done = 0
        while done < trials:
            k = min(_CHUNK, trials - done)
            out[done:done + k] = _invert_survival(ladder, rng.random((k, 1))[:, 0])
            done += k
        return out
    if mode == "continuous":
        lam_a, lam_d = _require_rates(dist)
        done = 0
        while done < trials:
            k = min(_CHUNK, trials - done)
            u = rng.random((k, 1 + cap))
            window = -np.log1p(-u[:, 0]) / lam_d
            gaps = -np.log1p(-u[:, 1:]) / lam_a
            out[done:done + k] = (np.cumsum(gaps, axis=1) < window[:, None]).sum(axis=1)
            done += k
        return out
    raise ValueError(f"unknown mode {mode!r}")


def estimate_success(m: AttackMdp, x: Deployment | None, pi: Policy,
                     nu: InitialDistribution, mode: str = "steps",
                     trials: int = 100_000, seed: int = 0) -> SimEstimate:
    """Success frequency over nu-weighted starts with a binomial error bar."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    protected = _protected_set(x)
    support = sorted(v for v, w in nu.weights.items() if w > 0.0)
    cum = np.cumsum([nu.weights[v] for v in support])
    cum[-1] = 1.0  # guard the top bin against rounding
    profiles = [_trajectory_profile(m, protected, pi, v) for v in support]
    succ_mask = np.array([k == "success" for k, _ in profiles])
    event_step = np.array([s for _, s in profiles], dtype=np.int64)

    cap = m.cmax + 1
    if mode == "steps":
        width = 2
        ladder = _survival_ladder(m.dist, cap)
    elif mode == "continuous":
        lam_a, lam_d = _require_rates(m.dist)
        width = 2 + cap
    else:
        raise ValueError(f"unknown mode {mode!r}")

    rng = np.random.default_rng(seed)
    successes = 0
    done = 0
    while done < trials:
        k = min(_CHUNK, trials - done)
        u = rng.random((k, width))
        sidx = np.searchsorted(cum, u[:, 0], side="right")
        if mode == "steps":
            budgets = _invert_survival(ladder, u[:, 1])
        else:
            window = -np.log1p(-u[:, 1]) / lam_d
            gaps = -np.log1p(-u[:, 2:]) / lam_a
            budgets = (np.cumsum(gaps, axis=1) < window[:, None]).sum(axis=1)
        successes += int(
            (succ_mask[sidx] & (budgets >= event_step[sidx])).sum()
        )
        done += k
    return SimEstimate.from_counts(successes, trials)
