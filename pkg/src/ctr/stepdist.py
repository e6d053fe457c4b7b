"""Laws of the attacker's per-round step budget.

Two variants: the geometric law arising from a Poisson-rate attacker racing
an exponential defender return time, and explicit finite survival tables.
Both expose the survival function Pr(N >= n), the pmf, and the conditional
one-step advance probability used by the MDP kernel.
"""

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import (
    InvalidSurvivalTable,
    NonPositiveRate,
    QuadratureNotConverged,
    ZeroConditioningMass,
)


class StepDistribution:
    """Common interface; concrete laws implement survival()."""

    def survival(self, n: int) -> float:
        raise NotImplementedError

    def pmf(self, n: int) -> float:
        return self.survival(n) - self.survival(n + 1)

    def conditional_advance(self, c: int) -> float:
        """Pr(N >= c+1 | N >= c); raises when the conditioning mass is zero."""
        s = self.survival(c)
        if s <= 0.0:
            raise ZeroConditioningMass(f"survival({c}) = 0")
        return self.survival(c + 1) / s

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(StepDistribution):
    """N ~ Geometric(p) counting steps before the defender returns.

    p = lambda_defender / (lambda_attacker + lambda_defender); survival is
    (1-p)^n and the advance probability is the constant 1-p (memoryless).
    """

    lambda_attacker: float
    lambda_defender: float

    def __post_init__(self):
        for name, rate in (("lambda_attacker", self.lambda_attacker),
                           ("lambda_defender", self.lambda_defender)):
            if not (rate > 0.0 and math.isfinite(rate)):
                raise NonPositiveRate(f"{name} must be positive and finite, got {rate}")

    @property
    def p(self) -> float:
        return self.lambda_defender / (self.lambda_attacker + self.lambda_defender)

    def survival(self, n: int) -> float:
        if n <= 0:
            return 1.0
        return (1.0 - self.p) ** n

    def conditional_advance(self, c: int) -> float:
        return 1.0 - self.p

    def spec(self) -> dict:
        return {
            "kind": "geometric",
            "lambda_attacker": self.lambda_attacker,
            "lambda_defender": self.lambda_defender,
        }


@dataclass(frozen=True)
class ExplicitSurvival(StepDistribution):
    """Finite survival table S(0..n_max) with a constant tail beyond it."""

    table: tuple
    tail: float = 0.0

    def __post_init__(self):
        table = tuple(float(x) for x in self.table)
        object.__setattr__(self, "table", table)
        if not table:
            raise InvalidSurvivalTable("survival table is empty")
        if table[0] != 1.0:
            raise InvalidSurvivalTable(f"S(0) must be 1, got {table[0]}")
        prev = table[0]
        for i, s in enumerate(table):
            if not 0.0 <= s <= 1.0:
                raise InvalidSurvivalTable(f"S({i}) = {s} outside [0, 1]")
            if s > prev:
                raise InvalidSurvivalTable(f"S({i}) = {s} exceeds S({i - 1}) = {prev}")
            prev = s
        if not 0.0 <= self.tail <= prev:
            raise InvalidSurvivalTable(f"tail {self.tail} exceeds last table value {prev}")

    def survival(self, n: int) -> float:
        if n <= 0:
            return 1.0
        if n < len(self.table):
            return self.table[n]
        return self.tail

    def spec(self) -> dict:
        return {"kind": "table", "survival": list(self.table), "tail": self.tail}


def geometric_from_rates(lambda_attacker: float, lambda_defender: float) -> Geometric:
    """Geometric law of the Poisson(lambda_attacker) vs Exp(lambda_defender) race."""
    return Geometric(lambda_attacker, lambda_defender)


def from_spec(spec: dict) -> StepDistribution:
    """Build a distribution from its run-config dict form."""
    kind = spec.get("kind")
    if kind == "geometric":
        return geometric_from_rates(spec["lambda_attacker"], spec["lambda_defender"])
    if kind == "table":
        return ExplicitSurvival(tuple(spec["survival"]), spec.get("tail", 0.0))
    raise ValueError(f"unknown distribution kind: {kind!r}")


def mixture_pmf_oracle(lambda_attacker: float, lambda_defender: float, n: int,
                       tol: float = 1e-10) -> float:
    """Pr(N = n) by adaptive quadrature of the Poisson/exponential mixture.

    Integrates (lam*t)^n/n! * exp(-lam*t) * lamD * exp(-lamD*t) over t >= 0,
    independently of the closed-form geometric pmf it cross-checks.
    """
    if not (lambda_attacker > 0.0 and lambda_defender > 0.0):
        raise NonPositiveRate("rates must be positive")
    if n < 0:
        return 0.0
    log_fact = math.lgamma(n + 1)

    def integrand(t):
        if t <= 0.0:
            return lambda_defender if n == 0 else 0.0
        log_term = n * math.log(lambda_attacker * t) - lambda_attacker * t - log_fact
        return math.exp(log_term) * lambda_defender * math.exp(-lambda_defender * t)

    value, abserr = integrate.quad(integrand, 0.0, math.inf, epsabs=tol, epsrel=tol,
                                   limit=200)
    if abserr > 1e-6:
        raise QuadratureNotConverged(f"error estimate {abserr} too large")
    return value
