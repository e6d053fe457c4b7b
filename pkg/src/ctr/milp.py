"""Solver-ready LP-text models for external cross-validation.

Three exports: the attacker's value LP under any kernel mode, the defender's
Stackelberg MILP (big-M linearization with M = 1, m = -1), and the
sampled-policy Dirichlet MILP. The emitted dialect is the plain LP file
format (objective, Subject To, Bounds, Binary, End) with 17-significant-digit
literals; ctr.milp.read_model parses it back and re-emission is
byte-identical, which the tests rely on.

Note on the Dirichlet lower envelope: the textbook row w >= v' contradicts
w = (1-x)v' whenever x = 1 and v' > 0 (it forces infeasibility through
states that reach a target). The default emission uses the valid envelope
w >= v' - x instead; pass paper_envelope=True to emit the literal row for
comparison.
"""

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import MilpParseError, PolicyIncomplete
from .graph import AttackGraph
from .mdp import AttackMdp, InitialDistribution, build_mdp
from .stepdist import StepDistribution
from .util import graph_digest, stable_json

_NAME_RE = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str            # "continuous" | "binary"
    lb: float = 0.0
    ub: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple         # ((coef, var_name), ...)
    sense: str           # "<=" | ">=" | "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    sense: str           # "min"
    objective: tuple     # ((coef, var_name), ...)
    variables: tuple
    constraints: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        declared = {v.name for v in self.variables}
        used = {n for _, n in self.objective}
        for c in self.constraints:
            used.update(n for _, n in c.terms)
        missing = used - declared
        if missing:
            raise ValueError(f"undeclared variables referenced: {sorted(missing)}")

    def variable_names(self, kind: str | None = None) -> list:
        return [v.name for v in self.variables if kind is None or v.kind == kind]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _terms_text(terms) -> str:
    parts = []
    for i, (coef, name) in enumerate(terms):
        body = name if abs(coef) == 1.0 else f"{_fmt(abs(coef))} {name}"
        if i == 0:
            parts.append(f"- {body}" if coef < 0 else body)
        else:
            parts.append(f"{'-' if coef < 0 else '+'} {body}")
    return " ".join(parts)


def write_model(model: MilpModel) -> str:
    """Canonical LP text; writing is the inverse of read_model byte for byte."""
    lines = [f"\\ ctr-milp {stable_json(model.metadata)}"]
    lines.append("Minimize" if model.sense == "min" else "Maximize")
    lines.append(f" obj: {_terms_text(model.objective)}")
    lines.append("Subject To")
    for c in model.constraints:
        lines.append(f" {c.name}: {_terms_text(c.terms)} {c.sense} {_fmt(c.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind == "continuous":
            lines.append(f" {_fmt(v.lb)} <= {v.name} <= {_fmt(v.ub)}")
    binaries = [v for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binary")
        for v in binaries:
            lines.append(f" {v.name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM_RE = re.compile(
    r"(?:(?P<sign>[+-])\s+)?(?:(?P<coef>[0-9][0-9.eE+-]*)\s+)?(?P<name>[A-Za-z_]\w*)"
)
_BOUND_RE = re.compile(r"\s*(?P<lb>\S+)\s*<=\s*(?P<name>\w+)\s*<=\s*(?P<ub>\S+)\s*\Z")


def _parse_terms(text: str):
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if m is None:
            raise MilpParseError(f"bad term syntax at: {text[pos:]!r}")
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            coef = -coef
        terms.append((coef, m.group("name")))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return tuple(terms)


def read_model(text: str) -> MilpModel:
    """Parse text produced by write_model (strict canonical subset)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("\\ ctr-milp "):
        raise MilpParseError("missing ctr-milp header comment")
    metadata = json.loads(lines[0][len("\\ ctr-milp "):])
    it = iter(lines[1:])
    sense_line = next(it, None)
    if sense_line not in ("Minimize", "Maximize"):
        raise MilpParseError(f"expected objective sense, got {sense_line!r}")
    sense = "min" if sense_line == "Minimize" else "max"
    obj_line = next(it, "")
    if not obj_line.startswith(" obj: "):
        raise MilpParseError("missing objective row")
    objective = _parse_terms(obj_line[len(" obj: "):])
    if next(it, None) != "Subject To":
        raise MilpParseError("missing Subject To section")

    constraints = []
    bounds_lines = []
    binary_names = []
    section = "constraints"
    for line in it:
        if line == "Bounds":
            section = "bounds"
            continue
        if line == "Binary":
            section = "binary"
            continue
        if line == "End":
            section = "end"
            break
        if section == "constraints":
            m = re.match(r" (\w+): (.*) (<=|>=|=) (\S+)\Z", line)
            if m is None:
                raise MilpParseError(f"bad constraint line: {line!r}")
            constraints.append(Constraint(
                name=m.group(1), terms=_parse_terms(m.group(2)),
                sense=m.group(3), rhs=float(m.group(4)),
            ))
        elif section == "bounds":
            bounds_lines.append(line)
        elif section == "binary":
            binary_names.append(line.strip())
    if section != "end":
        raise MilpParseError("missing End marker")

    variables = []
    for line in bounds_lines:
        m = _BOUND_RE.match(line)
        if m is None:
            raise MilpParseError(f"bad bounds line: {line!r}")
        variables.append(Variable(name=m.group("name"), kind="continuous",
                                  lb=float(m.group("lb")), ub=float(m.group("ub"))))
    for name in binary_names:
        variables.append(Variable(name=name, kind="binary", lb=0.0, ub=1.0))
    return MilpModel(sense=sense, objective=objective, variables=tuple(variables),
                     constraints=tuple(constraints), metadata=metadata)


def _node_token(g: AttackGraph, v: int) -> str:
    for cand in (g.labels[v], str(g.external_ids[v])):
        if cand is not None and _NAME_RE.match(str(cand)):
            return str(cand)
    return str(v)


def _base_metadata(g: AttackGraph, regime: str, **extra) -> dict:
    meta = {"schema": 1, "format": "lp", "regime": regime,
            "graph_sha256": graph_digest(g.document)}
    meta.update(extra)
    return meta


def _fix_rows(m: AttackMdp, var, suffix: str = "") -> list:
    rows = [
        Constraint(f"c_fix_sink{suffix}", ((1.0, var(m.sink_index)),), "=", 0.0),
        Constraint(f"c_fix_expired{suffix}", ((1.0, var(m.expired_index)),), "=", 0.0),
    ]
    for v in sorted(m.graph.targets):
        for c in range(m.cmax + 1):
            s = m.state_index(v, c)
            rows.append(Constraint(f"c_fix_s{s}{suffix}", ((1.0, var(s)),), "=", 1.0))
    return rows


def _nonterminal_states(m: AttackMdp):
    """(state, node, counter) for states with at least one action, in order."""
    for v in range(m.graph.n):
        if v in m.graph.targets or m.graph.out_degree(v) == 0:
            continue
        for c in range(m.cmax + 1):
            yield m.state_index(v, c), v, c


def export_attacker_lp(m: AttackMdp, nu: InitialDistribution | None = None) -> MilpModel:
    """Value LP: min nu'v subject to v_s >= sum P(s'|s,a) v_s' and boundaries.

    P is m's kernel (base, deployment, or belief), so the optimum equals the
    backward-induction value at nu.
    """
    nu = nu if nu is not None else InitialDistribution.uniform(m.graph)
    vname = lambda s: f"v_s{s}"
    objective = tuple(
        (w, vname(m.state_index(v, 0)))
        for v, w in sorted(nu.weights.items()) if w > 0.0
    )
    constraints = []
    for s, v, c in _nonterminal_states(m):
        for e in m.graph.out_edges(v):
            terms = [(1.0, vname(s))]
            terms += [(-p, vname(sp)) for sp, p in m.transition_row(s, e)]
            constraints.append(Constraint(f"c_bell_s{s}_e{e}", tuple(terms), ">=", 0.0))
    constraints += _fix_rows(m, var=vname)
    variables = tuple(Variable(vname(s), "continuous") for s in range(m.n_states))
    meta = _base_metadata(m.graph, "attacker-lp", kernel=m.mode,
                          h=m.deployment.h if m.deployment else None, K=None)
    return MilpModel("min", objective, variables, tuple(constraints), meta)


def export_stackelberg_milp(g: AttackGraph, dist: StepDistribution, h: int,
                            nu: InitialDistribution | None = None) -> MilpModel:
    """Defender's bi-level problem linearized with auxiliaries W = (1-x(v)) v'.

    Big-M envelopes use M = 1 and m = -1, which suffice since every value
    variable lives in [0, 1]; the budget row is sum x <= h.
    """
    from .solvers import enumerate_deployments

    enumerate_deployments(g, h)  # validates the budget against V_spot
    m = build_mdp(g, dist)
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    vname = lambda s: f"v_s{s}"
    spot = sorted(g.spot)
    xname = {v: f"x_n{_node_token(g, v)}" for v in spot}

    wnames = {}          # (s, sp) -> name, in first-reference order
    bellman = []
    for s, v, c in _nonterminal_states(m):
        for e in g.out_edges(v):
            terms = [(1.0, vname(s))]
            for sp, p in m.transition_row(s, e):
                if v in g.spot:
                    key = (s, sp)
                    if key not in wnames:
                        wnames[key] = f"w_s{s}_sp{sp}"
                    terms.append((-p, wnames[key]))
                else:
                    terms.append((-p, vname(sp)))
            bellman.append(Constraint(f"c_bell_s{s}_e{e}", tuple(terms), ">=", 0.0))

    envelopes = []
    for (s, sp), w in wnames.items():
        _, v, _ = m.state_of(s)
        x = xname[v]
        envelopes += [
            Constraint(f"c_wub_s{s}_sp{sp}", ((1.0, w), (1.0, x)), "<=", 1.0),
            Constraint(f"c_wlb_s{s}_sp{sp}", ((1.0, w), (-1.0, x)), ">=", -1.0),
            Constraint(f"c_wvub_s{s}_sp{sp}",
                       ((1.0, w), (-1.0, vname(sp)), (-1.0, x)), "<=", 0.0),
            Constraint(f"c_wvlb_s{s}_sp{sp}",
                       ((1.0, w), (-1.0, vname(sp)), (1.0, x)), ">=", 0.0),
        ]

    budget = Constraint("c_budget", tuple((1.0, xname[v]) for v in spot), "<=", float(h))
    objective = tuple(
        (w, vname(m.state_index(v, 0)))
        for v, w in sorted(nu.weights.items()) if w > 0.0
    )
    variables = (
        tuple(Variable(vname(s), "continuous") for s in range(m.n_states))
        + tuple(Variable(w, "continuous") for w in wnames.values())
        + tuple(Variable(xname[v], "binary") for v in spot)
    )
    constraints = tuple(bellman) + tuple(envelopes) + (budget,) + tuple(_fix_rows(m, var=vname))
    meta = _base_metadata(g, "stackelberg", h=h, K=None)
    return MilpModel("min", objective, variables, constraints, meta)


def export_dirichlet_milp(g: AttackGraph, dist: StepDistribution, h: int,
                          sampled_policies, nu: InitialDistribution | None = None,
                          seed: int | None = None,
                          paper_envelope: bool = False) -> MilpModel:
    """Defender MILP over K fixed sampled-belief policies.

    One Bellman block per sample k evaluates the frozen policy pi_k under the
    deployment kernel via auxiliaries w = (1-x(v)) v'; the objective averages
    the nu-weighted values across blocks.
    """
    from .solvers import enumerate_deployments

    enumerate_deployments(g, h)
    policies = list(sampled_policies)
    if not policies:
        raise PolicyIncomplete("need at least one sampled policy")
    m = build_mdp(g, dist)
    nu = nu if nu is not None else InitialDistribution.uniform(g)
    K = len(policies)
    spot = sorted(g.spot)
    xname = {v: f"x_n{_node_token(g, v)}" for v in spot}

    vvars, wvars, constraints, objective = [], [], [], []
    for k, pol in enumerate(policies):
        if np.asarray(pol.edges).shape != (m.n_states,):
            raise PolicyIncomplete(f"policy {k} does not cover the state space")
        vname = lambda s, k=k: f"v_s{s}_k{k}"
        vvars += [Variable(vname(s), "continuous") for s in range(m.n_states)]
        objective += [
            (w / K, vname(m.state_index(v, 0)))
            for v, w in sorted(nu.weights.items()) if w > 0.0
        ]
        block_env = []
        for s, v, c in _nonterminal_states(m):
            e = int(pol.edges[s])
            if e < 0:
                raise PolicyIncomplete(f"policy {k} undefined at state {m.state_of(s)}")
            if e not in g.out_edges(v):
                raise PolicyIncomplete(
                    f"policy {k} action {e} is not an out-edge of node {v}")
            terms = [(1.0, vname(s))]
            for sp, p in m.transition_row(s, e):
                if v in g.spot:
                    w = f"w_s{s}_sp{sp}_k{k}"
                    wvars.append(Variable(w, "continuous"))
                    x = xname[v]
                    block_env += [
                        Constraint(f"c_wvub_s{s}_sp{sp}_k{k}",
                                   ((1.0, w), (-1.0, vname(sp)), (-1.0, x)), "<=", 0.0),
                        Constraint(f"c_wub_s{s}_sp{sp}_k{k}",
                                   ((1.0, w), (1.0, x)), "<=", 1.0),
                        Constraint(f"c_wvlb_s{s}_sp{sp}_k{k}",
                                   ((1.0, w), (-1.0, vname(sp)), (1.0, x)) if not paper_envelope
                                   else ((1.0, w), (-1.0, vname(sp))), ">=", 0.0),
                    ]
                    terms.append((-p, w))
                else:
                    terms.append((-p, vname(sp)))
            constraints.append(
                Constraint(f"c_bell_s{s}_k{k}", tuple(terms), ">=", 0.0))
        constraints += block_env
        constraints += _fix_rows(m, suffix=f"_k{k}", var=vname)

    constraints.append(
        Constraint("c_budget", tuple((1.0, xname[v]) for v in spot), "<=", float(h)))
    variables = tuple(vvars) + tuple(wvars) + tuple(Variable(xname[v], "binary") for v in spot)
    meta = _base_metadata(g, "dirichlet", h=h, K=K, seed=seed,
                          envelope="paper" if paper_envelope else "amended")
    return MilpModel("min", tuple(objective), variables, tuple(constraints), meta)


def solve_with_highs(model: MilpModel):
    """Optimize an exported model with scipy's HiGHS MILP backend.

    Returns (objective_value, {var: value}). Used by the optional
    cross-validation tests; raises RuntimeError if the solve fails.
    """
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, milp

    names = [v.name for v in model.variables]
    index = {n: i for i, n in enumerate(names)}
    c = np.zeros(len(names))
    for coef, name in model.objective:
        c[index[name]] += coef
    if model.sense == "max":
        c = -c

    rows, cols, vals = [], [], []
    lo = np.empty(len(model.constraints))
    hi = np.empty(len(model.constraints))
    for i, con in enumerate(model.constraints):
        for coef, name in con.terms:
            rows.append(i)
            cols.append(index[name])
            vals.append(coef)
        if con.sense == "<=":
            lo[i], hi[i] = -np.inf, con.rhs
        elif con.sense == ">=":
            lo[i], hi[i] = con.rhs, np.inf
        else:
            lo[i], hi[i] = con.rhs, con.rhs
    A = sparse.csr_matrix((vals, (rows, cols)),
                          shape=(len(model.constraints), len(names)))
    integrality = np.array([1 if v.kind == "binary" else 0 for v in model.variables])
    bounds = Bounds(np.array([v.lb for v in model.variables]),
                    np.array([v.ub for v in model.variables]))
    res = milp(c=c, constraints=LinearConstraint(A, lo, hi),
               integrality=integrality, bounds=bounds)
    if not res.success:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    obj = -res.fun if model.sense == "max" else res.fun
    return obj, dict(zip(names, res.x))
