"""Detector-placement games on acyclic attack graphs.

Core flow: parse a graph (ctr.graph), pick a step-budget law (ctr.stepdist),
build the attacker MDP (ctr.mdp), and solve the defender's problem under a
chosen information regime (ctr.solvers). ctr.sim validates values by
simulation, ctr.milp exports solver-ready models, and ctr.cli wires it all
into the `ctr` command.
"""

from .graph import (
    AttackGraph,
    betweenness_centrality,
    enumerate_paths,
    load_graph,
    longest_path_bound,
    parse_graph,
    shortest_path_to_target,
)
from .heuristics import HeuristicReport, evaluate_heuristic, random_defense, shortest_path_defense
from .kernels import BACKEND
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
    path_value_oracle,
)
from .milp import (
    export_attacker_lp,
    export_dirichlet_milp,
    export_stackelberg_milp,
    read_model,
    write_model,
)
from .sim import SimEstimate, estimate_success, simulate_round
from .solvers import (
    DirichletParams,
    RegimeSolution,
    compare_regimes,
    hoeffding_sample_size,
    sample_dirichlet,
    solve_blind,
    solve_dirichlet,
    solve_stackelberg,
)
from .stepdist import ExplicitSurvival, Geometric, geometric_from_rates, mixture_pmf_oracle

__version__ = "0.1.0"

__all__ = [
    "AttackGraph", "AttackMdp", "BeliefVector", "Deployment", "DirichletParams",
    "ExplicitSurvival", "Geometric", "HeuristicReport", "InitialDistribution",
    "Policy", "RegimeSolution", "SimEstimate", "BACKEND",
    "apply_belief", "apply_deployment", "best_response", "betweenness_centrality",
    "build_mdp", "compare_regimes", "enumerate_paths", "estimate_success",
    "evaluate_heuristic", "evaluate_policy", "export_attacker_lp",
    "export_dirichlet_milp", "export_stackelberg_milp", "geometric_from_rates",
    "hoeffding_sample_size", "initial_value", "load_graph", "longest_path_bound",
    "mixture_pmf_oracle", "parse_graph", "path_value_oracle", "random_defense",
    "read_model", "sample_dirichlet", "shortest_path_defense",
    "shortest_path_to_target", "simulate_round", "solve_blind", "solve_dirichlet",
    "solve_stackelberg", "write_model",
]
