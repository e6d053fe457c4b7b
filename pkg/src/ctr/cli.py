"""Command-line surface: the `ctr` tool.

Subcommands: validate, solve, sweep, simulate, export-milp, sample-size,
demo. Every command is deterministic given its arguments (seeds included);
the only varying output fields are the wall_ms timings, which are
informational.
"""

import argparse
import csv
import io
import json
import sys
import time
import warnings

import numpy as np

from . import demo as demo_mod
from .errors import CtrError
from .graph import (
    betweenness_centrality,
    count_paths_to_targets,
    load_graph,
    longest_path_bound,
)
from .heuristics import evaluate_heuristic, shortest_path_defense
from .kernels import BACKEND
from .mdp import (
    Deployment,
    InitialDistribution,
    apply_deployment,
    best_response,
    build_mdp,
    evaluate_policy,
    initial_value,
)
from .milp import export_attacker_lp, export_dirichlet_milp, export_stackelberg_milp, write_model
from .sim import SimEstimate, estimate_success
from .solvers import (
    DirichletParams,
    blind_belief,
    hoeffding_sample_size,
    sample_policies,
    solve_blind,
    solve_dirichlet,
    solve_stackelberg,
)
from .stepdist import from_spec
from .util import graph_digest, stable_json

DEFAULT_DIST = {"kind": "geometric", "lambda_attacker": 2.0, "lambda_defender": 1.0}
CSV_HEADER = ["h", "strategy", "deployment", "analytic_value", "sim_value",
              "sim_stderr", "trials", "seed", "wall_ms"]


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _setting(args, config, key, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    return config.get(key, default)


def _dist_from(args, config):
    raw = _setting(args, config, "distribution")
    if raw is None:
        raw = _setting(args, config, "dist")
    if raw is None:
        return from_spec(DEFAULT_DIST), DEFAULT_DIST
    if isinstance(raw, str):
        raw = json.loads(raw) if raw.lstrip().startswith("{") else _load_config(raw)
    return from_spec(raw), raw


def _graph_from(args, config):
    path = _setting(args, config, "graph")
    if path is None:
        raise CtrError("no graph given (--graph or config 'graph')")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_graph(path), path


def _resolve_node(g, token):
    for v in range(g.n):
        if g.labels[v] == token:
            return v
    for v in range(g.n):
        if str(g.external_ids[v]) == str(token):
            return v
    raise CtrError(f"unknown node {token!r}")


def _dirichlet_params(args, config, g):
    K = _setting(args, config, "K")
    eps = _setting(args, config, "eps")
    delta = _setting(args, config, "delta")
    if (K is None) == (eps is None and delta is None):
        raise CtrError("give exactly one of --K or --eps/--delta")
    if K is None:
        if eps is None or delta is None:
            raise CtrError("--eps and --delta must be given together")
        K = hoeffding_sample_size(float(eps), float(delta))
    seed = int(_setting(args, config, "seed", 0))
    spec = _setting(args, config, "alpha", "uniform")
    if isinstance(spec, str) and spec.startswith("["):
        spec = json.loads(spec)
    if isinstance(spec, list):
        spot = sorted(g.spot)
        if len(spec) != len(spot):
            raise CtrError(f"alpha vector needs {len(spot)} entries, got {len(spec)}")
        return DirichletParams(dict(zip(spot, map(float, spec))), int(K), seed)
    if spec == "uniform":
        return DirichletParams.uniform(g, int(K), seed)
    if isinstance(spec, str) and spec.startswith("concentrated:"):
        try:
            _, token, scale = spec.split(":")
        except ValueError:
            raise CtrError("expected concentrated:<node>:<M>") from None
        return DirichletParams.concentrated(g, _resolve_node(g, token),
                                            float(scale), int(K), seed)
    raise CtrError(f"bad alpha spec {spec!r}")


def _names(g, nodes):
    return [g.name_of(v) for v in sorted(nodes)]


def _policy_summary(g, m, pol, nu):
    routes = {}
    for v in sorted(nu.weights):
        if nu.weights[v] <= 0.0 or v in g.targets:
            continue
        route = [v]
        steps = 0
        node = v
        while steps < m.cmax:
            nxt = pol.chosen_successor(m, node, steps)
            if nxt is None:
                break
            route.append(nxt)
            node = nxt
            steps += 1
            if node in g.targets:
                break
        routes[g.name_of(v)] = [g.name_of(u) for u in route]
    return routes


def _solution_record(g, sol):
    return {
        "regime": sol.regime,
        "deployment": _names(g, sol.deployment.protected),
        "value": sol.value,
        "value_table": [
            {"deployment": _names(g, combo), "value": val}
            for combo, val in sol.value_table
        ],
        "K": sol.K,
        "seed": sol.seed,
        "tie_states": sol.tie_states,
        "policies": len(sol.attacker_policy),
        "wall_ms": sol.wall_ms,
    }


def _emit(record, out_path):
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------


def cmd_validate(args):
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            g = load_graph(args.graph)
    except (CtrError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    cmax = longest_path_bound(g)
    n_paths = sum(count_paths_to_targets(g, e) for e in sorted(g.entries))
    print(f"{g.n} nodes, {len(g.edges)} edges, c_max={cmax}, "
          f"{n_paths} entry->target paths")
    print(f"entries: {', '.join(_names(g, g.entries)) or '-'}")
    print(f"targets: {', '.join(_names(g, g.targets))}")
    print(f"spot:    {', '.join(_names(g, g.spot))}")
    bc = betweenness_centrality(g)
    top = sorted(range(g.n), key=lambda v: (-bc[v], v))[:5]
    ranked = ", ".join(f"{g.name_of(v)}={bc[v]:.3f}" for v in top)
    print(f"top betweenness: {ranked}")
    for w in caught:
        print(f"warning: {w.message}")
    return 0


def _nu_from(args, config, g):
    start = _setting(args, config, "start")
    if start is None:
        return InitialDistribution.uniform(g)
    return InitialDistribution.point_mass(_resolve_node(g, start))


def cmd_solve(args):
    config = _load_config(args.config) if args.config else {}
    g, gpath = _graph_from(args, config)
    dist, dist_spec = _dist_from(args, config)
    h = int(_setting(args, config, "h", 1))
    if h < 1:
        raise CtrError("budget must be >= 1")
    regime = _setting(args, config, "regime", "stackelberg")
    nu = _nu_from(args, config, g)
    seed = int(_setting(args, config, "seed", 0))

    if regime == "stackelberg":
        sol = solve_stackelberg(g, dist, h, nu)
    elif regime == "blind":
        sol = solve_blind(g, dist, h, nu)
    elif regime == "dirichlet":
        sol = solve_dirichlet(g, dist, h, _dirichlet_params(args, config, g), nu)
    else:
        raise CtrError(f"unknown regime {regime!r}")

    m = apply_deployment(build_mdp(g, dist), sol.deployment)
    record = {
        "schema": 1,
        "backend": BACKEND,
        "config": {
            "graph": gpath,
            "graph_sha256": graph_digest(g.document),
            "distribution": dist_spec,
            "regime": regime,
            "h": h,
            "seed": seed,
            "nu": {g.name_of(v): w for v, w in sorted(nu.weights.items())},
        },
        "result": _solution_record(g, sol),
        "policy_summary": _policy_summary(g, m, sol.attacker_policy[0], nu),
    }
    _emit(record, args.out)
    print(f"{regime}: deployment {{{', '.join(_names(g, sol.deployment.protected))}}} "
          f"value {sol.value:.7f}", file=sys.stderr)
    return 0


def _simulate_solution(m_dep, sol, nu, mode, trials, seed):
    """Pooled estimate: trials split evenly across the stored policies."""
    pols = sol.attacker_policy
    shares = [trials // len(pols)] * len(pols)
    for i in range(trials - sum(shares)):
        shares[i] += 1
    successes = 0
    total = 0
    for k, (pol, share) in enumerate(zip(pols, shares)):
        if share == 0:
            continue
        est = estimate_success(m_dep, sol.deployment, pol, nu, mode, share,
                               seed=int(np.random.SeedSequence(seed, spawn_key=(k,))
                                        .generate_state(1)[0]))
        successes += est.successes
        total += est.trials
    return SimEstimate.from_counts(successes, total)


def cmd_sweep(args):
    config = _load_config(args.config) if args.config else {}
    g, _ = _graph_from(args, config)
    dist, _ = _dist_from(args, config)
    nu = _nu_from(args, config, g)
    h_min = int(_setting(args, config, "h-min", 1))
    h_max = int(_setting(args, config, "h-max", len(g.spot)))
    if not 1 <= h_min <= h_max <= len(g.spot):
        raise CtrError(f"need 1 <= h-min <= h-max <= {len(g.spot)}")
    seed = int(_setting(args, config, "seed", 0))
    trials = int(_setting(args, config, "trials", 100_000))
    heuristic_trials = int(_setting(args, config, "heuristic-trials", 20))
    simulate = bool(getattr(args, "simulate", False) or config.get("simulate"))

    base = build_mdp(g, dist)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_HEADER)

    def row(h, strategy, deployment, analytic, sim, wall_ms, trials_cell, seed_cell):
        writer.writerow([
            h, strategy, deployment,
            repr(float(analytic)) if analytic is not None else "",
            repr(float(sim.frequency)) if sim else "",
            repr(float(sim.stderr)) if sim else "",
            trials_cell if trials_cell is not None else "",
            seed_cell if seed_cell is not None else "",
            f"{wall_ms:.3f}",
        ])

    for h in range(h_min, h_max + 1):
        solvers = [("stackelberg", lambda: solve_stackelberg(g, dist, h, nu)),
                   ("blind", lambda: solve_blind(g, dist, h, nu))]
        try:
            params = _dirichlet_params(args, config, g)
            solvers.append(("dirichlet",
                            lambda: solve_dirichlet(g, dist, h, params, nu)))
        except CtrError:
            params = None
        for name, run in solvers:
            sol = run()
            sim = None
            if simulate:
                m_dep = apply_deployment(base, sol.deployment)
                sim = _simulate_solution(m_dep, sol, nu, "steps", trials, seed)
            row(h, name, ";".join(_names(g, sol.deployment.protected)),
                sol.value, sim, sol.wall_ms,
                trials if simulate else None,
                seed if name == "dirichlet" or simulate else None)

        t0 = time.perf_counter()
        rep = evaluate_heuristic(g, dist, h, "shortest-path", "stackelberg", nu=nu)
        wall = (time.perf_counter() - t0) * 1e3
        sim = None
        if simulate:
            x = shortest_path_defense(g, h)
            m_dep = apply_deployment(base, x)
            pol = best_response(m_dep)
            sim = estimate_success(m_dep, x, pol, nu, "steps", trials, seed)
        row(h, "heuristic-shortest-path",
            ";".join(g.name_of(v) for v in rep.deployments[0]),
            rep.mean, sim, wall, trials if simulate else None,
            seed if simulate else None)

        t0 = time.perf_counter()
        rep = evaluate_heuristic(g, dist, h, "random", "stackelberg",
                                 trials=heuristic_trials, seed=seed, nu=nu)
        wall = (time.perf_counter() - t0) * 1e3
        row(h, "heuristic-random", "", rep.mean, None, wall,
            heuristic_trials, seed)

    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args):
    config = _load_config(args.config) if args.config else {}
    g, gpath = _graph_from(args, config)
    dist, dist_spec = _dist_from(args, config)
    nu = _nu_from(args, config, g)
    mode = _setting(args, config, "mode", "steps")
    trials = int(_setting(args, config, "trials", 100_000))
    seed = int(_setting(args, config, "seed", 0))
    base = build_mdp(g, dist)

    deploy = _setting(args, config, "deploy")
    if deploy:
        tokens = deploy.split(",") if isinstance(deploy, str) else deploy
        protected = frozenset(_resolve_node(g, t.strip()) for t in tokens)
        x = Deployment(protected, len(protected))
        m_dep = apply_deployment(base, x)
        pol = best_response(m_dep)
        analytic = initial_value(m_dep, pol.values, nu)
        est = estimate_success(m_dep, x, pol, nu, mode, trials, seed)
        regime = "best-response"
    else:
        h = int(_setting(args, config, "h", 1))
        regime = _setting(args, config, "regime", "stackelberg")
        if regime == "stackelberg":
            sol = solve_stackelberg(g, dist, h, nu)
        elif regime == "blind":
            sol = solve_blind(g, dist, h, nu)
        elif regime == "dirichlet":
            sol = solve_dirichlet(g, dist, h, _dirichlet_params(args, config, g), nu)
        else:
            raise CtrError(f"unknown regime {regime!r}")
        x = sol.deployment
        m_dep = apply_deployment(base, x)
        analytic = sol.value
        est = _simulate_solution(m_dep, sol, nu, mode, trials, seed)

    delta = est.frequency - analytic
    record = {
        "schema": 1,
        "backend": BACKEND,
        "config": {"graph": gpath, "distribution": dist_spec, "mode": mode,
                   "trials": trials, "seed": seed, "regime": regime,
                   "deployment": _names(g, x.protected)},
        "result": {
            "analytic_value": analytic,
            "sim_value": est.frequency,
            "sim_stderr": est.stderr,
            "ci95": list(est.ci95),
            "delta": delta,
            "within_3_sigma": bool(abs(delta) <= 3.0 * est.stderr or est.stderr == 0.0),
        },
    }
    _emit(record, args.out)
    return 0


def cmd_export_milp(args):
    config = _load_config(args.config) if args.config else {}
    g, gpath = _graph_from(args, config)
    dist, dist_spec = _dist_from(args, config)
    nu = _nu_from(args, config, g)
    h = int(_setting(args, config, "h", 1))
    what = _setting(args, config, "what", "all")
    stem = args.stem
    written = {}

    def emit(suffix, model):
        path = f"{stem}.{suffix}.lp"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(write_model(model))
        written[suffix] = path

    if what in ("attacker", "all"):
        emit("attacker", export_attacker_lp(build_mdp(g, dist), nu))
    if what in ("stackelberg", "all"):
        emit("stackelberg", export_stackelberg_milp(g, dist, h, nu))
    if what in ("dirichlet", "all"):
        params = _dirichlet_params(args, config, g)
        pols = sample_policies(g, dist, params)
        emit("dirichlet", export_dirichlet_milp(g, dist, h, pols, nu,
                                                seed=params.seed))
    meta = {
        "schema": 1,
        "graph": gpath,
        "graph_sha256": graph_digest(g.document),
        "distribution": dist_spec,
        "h": h,
        "K": _setting(args, config, "K"),
        "seed": int(_setting(args, config, "seed", 0)),
        "files": written,
    }
    with open(f"{stem}.meta.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for suffix, path in written.items():
        print(f"wrote {path}")
    print(f"wrote {stem}.meta.json")
    return 0


def cmd_sample_size(args):
    print(hoeffding_sample_size(args.eps, args.delta))
    return 0


def cmd_demo(args):
    report = demo_mod.run_demo()
    g = demo_mod.demo_graph()

    def namerow(row):
        return {g.name_of(v): row[v] for v in sorted(row)}

    print("six-node demo (survival table [1, 1, 0.80, 0.35], h = 1, entry A)")
    print(f"  stackelberg row : {namerow(report.stackelberg_row)}  "
          f"avg {report.stackelberg_avg:.2f}")
    print("  belief q* = 0.25: "
          f"path B {report.belief_path_values['B']:.2f}, "
          f"path C {report.belief_path_values['C']:.2f}, "
          f"long path {report.belief_path_values['DE']:.6f} (~0.20)")
    print(f"  q*-policy routes via {g.name_of(report.belief_choice)}")
    print(f"  dirichlet row   : {namerow(report.dirichlet_row)}  "
          f"avg {report.dirichlet_avg:.2f}")
    print(f"Stackelberg avg {report.stackelberg_avg:.2f}, "
          f"Dirichlet avg {report.dirichlet_avg:.2f}, "
          f"improvement {report.improvement:.0%}")

    if args.emit_graph:
        with open(args.emit_graph, "w", encoding="utf-8") as fh:
            fh.write(stable_json(demo_mod.demo_document()) + "\n")
        print(f"wrote {args.emit_graph}")

    failures = report.failures()
    for cell, got, want, tol in failures:
        print(f"MISMATCH {cell}: got {got!r}, want {want!r} (tol {tol})",
              file=sys.stderr)
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("validate", help="parse a graph and print its census")
    pv.add_argument("graph")
    pv.set_defaults(fn=cmd_validate)

    def common(sp, need_out=True):
        sp.add_argument("--config", help="JSON run-config file; flags override")
        sp.add_argument("--graph")
        sp.add_argument("--dist", help="distribution JSON (inline or file path)")
        sp.add_argument("--start", help="point-mass initial node (default: uniform)")
        sp.add_argument("--seed", type=int)
        if need_out:
            sp.add_argument("--out")

    ps = sub.add_parser("solve", help="optimal deployment for one regime")
    common(ps)
    ps.add_argument("--regime", choices=["stackelberg", "blind", "dirichlet"])
    ps.add_argument("--h", type=int)
    ps.add_argument("--alpha", help="uniform | [v1,...] | concentrated:<node>:<M>")
    ps.add_argument("--K", type=int)
    ps.add_argument("--eps", type=float)
    ps.add_argument("--delta", type=float)
    ps.set_defaults(fn=cmd_solve)

    pw = sub.add_parser("sweep", help="budget sweep CSV across regimes/heuristics")
    common(pw)
    pw.add_argument("--h-min", type=int, dest="h_min")
    pw.add_argument("--h-max", type=int, dest="h_max")
    pw.add_argument("--alpha")
    pw.add_argument("--K", type=int)
    pw.add_argument("--eps", type=float)
    pw.add_argument("--delta", type=float)
    pw.add_argument("--simulate", action="store_true")
    pw.add_argument("--trials", type=int)
    pw.add_argument("--heuristic-trials", type=int, dest="heuristic_trials")
    pw.set_defaults(fn=cmd_sweep)

    pm = sub.add_parser("simulate", help="Monte-Carlo check of a solved deployment")
    common(pm)
    pm.add_argument("--regime", choices=["stackelberg", "blind", "dirichlet"])
    pm.add_argument("--h", type=int)
    pm.add_argument("--deploy", help="comma-separated nodes to protect instead")
    pm.add_argument("--mode", choices=["steps", "continuous"])
    pm.add_argument("--trials", type=int)
    pm.add_argument("--alpha")
    pm.add_argument("--K", type=int)
    pm.add_argument("--eps", type=float)
    pm.add_argument("--delta", type=float)
    pm.set_defaults(fn=cmd_simulate)

    pe = sub.add_parser("export-milp", help="write LP-text models + meta sidecar")
    common(pe, need_out=False)
    pe.add_argument("--stem", required=True, help="output path prefix")
    pe.add_argument("--h", type=int)
    pe.add_argument("--what", choices=["attacker", "stackelberg", "dirichlet", "all"])
    pe.add_argument("--alpha")
    pe.add_argument("--K", type=int)
    pe.add_argument("--eps", type=float)
    pe.add_argument("--delta", type=float)
    pe.set_defaults(fn=cmd_export_milp)

    pk = sub.add_parser("sample-size", help="Hoeffding bound for Monte-Carlo K")
    pk.add_argument("--eps", type=float, required=True)
    pk.add_argument("--delta", type=float, required=True)
    pk.set_defaults(fn=cmd_sample_size)

    pd = sub.add_parser("demo", help="run the bundled six-node analysis")
    pd.add_argument("--emit-graph", dest="emit_graph",
                    help="also write the demo graph JSON here")
    pd.set_defaults(fn=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CtrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
