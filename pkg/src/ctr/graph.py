"""Attack-graph parsing, validation, and structural analysis.

Graphs are directed and acyclic: nodes are vulnerabilities or compromised
states, edges are exploit transitions, and every attack ends in one of the
designated target nodes. Node ids are remapped to dense 0..n-1 indices at
parse time so downstream code can use flat arrays; the original ids and
optional labels are retained for reporting.
"""

import json
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CycleDetected,
    DanglingReference,
    DuplicateEdge,
    EmptySpot,
    EmptyTargets,
    EntryIsTarget,
    GraphValidationError,
    PathLimitExceeded,
    SpotIntersectsTargets,
    TargetHasOutEdge,
)

DEFAULT_PATH_LIMIT = 10**6

_DOCUMENT_KEYS = {"nodes", "edges", "entries", "targets", "spot"}
_NODE_KEYS = {"id", "label"}


@dataclass(frozen=True)
class AttackGraph:
    """Validated directed acyclic attack graph with dense node indices."""

    n: int
    external_ids: tuple          # dense index -> id used in the source document
    labels: tuple                # dense index -> label or None
    edges: tuple                 # (src, dst) pairs sorted by (src, dst)
    entries: frozenset
    targets: frozenset
    spot: frozenset
    indptr: np.ndarray = field(repr=False)     # CSR out-edge index, len n+1
    edge_dst: np.ndarray = field(repr=False)   # CSR dst array, len |E|
    document: dict = field(repr=False)         # canonical parsed document

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.edge_dst.setflags(write=False)

    def out_edges(self, v: int) -> range:
        """Global edge indices leaving node v, in (src, dst) order."""
        return range(int(self.indptr[v]), int(self.indptr[v + 1]))

    def out_degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def successors(self, v: int) -> list:
        return [int(self.edge_dst[e]) for e in self.out_edges(v)]

    def name_of(self, v: int) -> str:
        label = self.labels[v]
        return label if label is not None else str(self.external_ids[v])

    def nodes_without_target_path(self) -> frozenset:
        reach = _reaches_target(self)
        return frozenset(v for v in range(self.n) if not reach[v])


def parse_graph(document: dict) -> AttackGraph:
    """Parse and validate a graph document (see the JSON schema in README).

    Raises a GraphValidationError subclass naming the first violated
    invariant; nodes that cannot reach any target are allowed but produce a
    warning since their game value is identically zero.
    """
    if not isinstance(document, dict):
        raise GraphValidationError("document must be a JSON object")
    unknown = set(document) - _DOCUMENT_KEYS
    if unknown:
        raise GraphValidationError(f"unknown document keys: {sorted(unknown)}")
    for key in ("nodes", "edges", "entries", "targets"):
        if key not in document:
            raise GraphValidationError(f"missing required key: {key!r}")

    external_ids, labels = [], []
    index_of = {}
    for item in document["nodes"]:
        if not isinstance(item, dict):
            raise GraphValidationError("each node must be an object")
        bad = set(item) - _NODE_KEYS
        if bad:
            raise GraphValidationError(f"unknown node keys: {sorted(bad)}")
        if "id" not in item:
            raise GraphValidationError("node missing 'id'")
        ext = item["id"]
        if ext in index_of:
            raise GraphValidationError(f"duplicate node id {ext!r}")
        index_of[ext] = len(external_ids)
        external_ids.append(ext)
        labels.append(item.get("label"))
    n = len(external_ids)
    if n == 0:
        raise GraphValidationError("graph has no nodes")

    def resolve(ext, role):
        try:
            return index_of[ext]
        except KeyError:
            raise DanglingReference(f"{role} references unknown node {ext!r}") from None

    edges = []
    seen = set()
    for pair in document["edges"]:
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise GraphValidationError(f"edge must be a [src, dst] pair, got {pair!r}")
        src = resolve(pair[0], "edge source")
        dst = resolve(pair[1], "edge destination")
        if src == dst:
            raise CycleDetected([external_ids[src], external_ids[dst]])
        if (src, dst) in seen:
            raise DuplicateEdge(f"duplicate edge {pair[0]!r} -> {pair[1]!r}")
        seen.add((src, dst))
        edges.append((src, dst))

    targets = frozenset(resolve(t, "targets") for t in document["targets"])
    entries = frozenset(resolve(v, "entries") for v in document["entries"])
    spot = frozenset(resolve(v, "spot") for v in document.get("spot", []))

    if not targets:
        raise EmptyTargets("targets must be nonempty")
    if not spot:
        raise EmptySpot("spot must be nonempty")
    if spot & targets:
        bad = sorted(external_ids[v] for v in spot & targets)
        raise SpotIntersectsTargets(f"spot nodes {bad} are targets")
    if entries & targets:
        bad = sorted(external_ids[v] for v in entries & targets)
        raise EntryIsTarget(f"entry nodes {bad} are targets")
    for src, dst in edges:
        if src in targets:
            raise TargetHasOutEdge(
                f"target {external_ids[src]!r} has out-edge to {external_ids[dst]!r}"
            )

    cycle = _find_cycle(n, edges)
    if cycle is not None:
        raise CycleDetected([external_ids[v] for v in cycle])

    edges.sort()
    indptr = np.zeros(n + 1, dtype=np.int64)
    for src, _ in edges:
        indptr[src + 1] += 1
    np.cumsum(indptr, out=indptr)
    edge_dst = np.array([dst for _, dst in edges], dtype=np.int64)

    canonical = {
        "nodes": [
            {"id": external_ids[v]} if labels[v] is None
            else {"id": external_ids[v], "label": labels[v]}
            for v in range(n)
        ],
        "edges": [[external_ids[s], external_ids[d]] for s, d in edges],
        "entries": sorted((external_ids[v] for v in entries), key=str),
        "targets": sorted((external_ids[v] for v in targets), key=str),
        "spot": sorted((external_ids[v] for v in spot), key=str),
    }
    g = AttackGraph(
        n=n,
        external_ids=tuple(external_ids),
        labels=tuple(labels),
        edges=tuple(edges),
        entries=entries,
        targets=targets,
        spot=spot,
        indptr=indptr,
        edge_dst=edge_dst,
        document=canonical,
    )

    dead = g.nodes_without_target_path()
    if dead:
        names = ", ".join(sorted(g.name_of(v) for v in dead))
        warnings.warn(f"nodes with no path to any target: {names}", stacklevel=2)
    return g


def load_graph(path) -> AttackGraph:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("digraph"):
        return parse_graph(dot_to_document(text))
    return parse_graph(json.loads(text))


def dot_to_document(text: str) -> dict:
    """Convert the supported DOT subset to the JSON graph model.

    Recognizes `a -> b;` edges and node attribute lines `a [entry];`,
    `a [target];`, `a [spot];` (attributes may be comma-separated).
    """
    body = re.search(r"digraph[^{]*\{(.*)\}", text, re.DOTALL)
    if body is None:
        raise GraphValidationError("not a digraph")
    nodes, edges = [], []
    entries, targets, spot = [], [], []
    seen = set()

    def touch(name):
        if name not in seen:
            seen.add(name)
            nodes.append(name)

    for stmt in body.group(1).split(";"):
        stmt = stmt.strip()
        if not stmt:
            continue
        m = re.fullmatch(r"(\w+)\s*->\s*(\w+)", stmt)
        if m:
            touch(m.group(1))
            touch(m.group(2))
            edges.append([m.group(1), m.group(2)])
            continue
        m = re.fullmatch(r"(\w+)\s*\[([^\]]*)\]", stmt)
        if m:
            touch(m.group(1))
            attrs = {a.strip() for a in m.group(2).split(",")}
            if "entry" in attrs:
                entries.append(m.group(1))
            if "target" in attrs:
                targets.append(m.group(1))
            if "spot" in attrs:
                spot.append(m.group(1))
            continue
        raise GraphValidationError(f"unsupported DOT statement: {stmt!r}")

    return {
        "nodes": [{"id": name, "label": name} for name in nodes],
        "edges": edges,
        "entries": entries,
        "targets": targets,
        "spot": spot,
    }


def _find_cycle(n: int, edges) -> list | None:
    """Iterative DFS; returns a cycle witness node list or None."""
    adj = [[] for _ in range(n)]
    for src, dst in edges:
        adj[src].append(dst)
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            advanced = False
            for u in it:
                if color[u] == 0:
                    color[u] = 1
                    parent[u] = v
                    stack.append((u, iter(adj[u])))
                    advanced = True
                    break
                if color[u] == 1:
                    cycle = [u]
                    w = v
                    while w != u:
                        cycle.append(w)
                        w = parent[w]
                    cycle.append(u)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[v] = 2
                stack.pop()
    return None


def topological_order(g: AttackGraph) -> list:
    """Topological order of dense node indices (parse guarantees acyclicity)."""
    indeg = [0] * g.n
    for _, dst in g.edges:
        indeg[dst] += 1
    ready = sorted(v for v in range(g.n) if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop()
        order.append(v)
        for u in g.successors(v):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
    return order


def longest_path_bound(g: AttackGraph) -> int:
    """Edge count of the longest directed path (DP over a topological order)."""
    longest = [0] * g.n
    for v in reversed(topological_order(g)):
        for u in g.successors(v):
            longest[v] = max(longest[v], 1 + longest[u])
    return max(longest, default=0)


def _reaches_target(g: AttackGraph) -> list:
    reach = [v in g.targets for v in range(g.n)]
    for v in reversed(topological_order(g)):
        if not reach[v]:
            reach[v] = any(reach[u] for u in g.successors(v))
    return reach


def enumerate_paths(g: AttackGraph, start: int, limit: int = DEFAULT_PATH_LIMIT) -> list:
    """All simple paths from `start` to any target, in lexicographic order.

    The graph is acyclic so every directed path is simple. Enumeration stops
    with PathLimitExceeded beyond `limit` paths (the path set is worst-case
    exponential).
    """
    if start in g.targets:
        return [[start]]
    reach = _reaches_target(g)
    out = []
    path = [start]

    def descend(v):
        for u in g.successors(v):       # successors are dst-sorted: lex order
            if u in g.targets:
                if len(out) >= limit:
                    raise PathLimitExceeded(f"more than {limit} paths")
                out.append(path + [u])
            elif reach[u]:
                path.append(u)
                descend(u)
                path.pop()

    descend(start)
    return out


def count_paths_to_targets(g: AttackGraph, start: int) -> int:
    """Number of distinct paths from `start` to the target set (DP, exact)."""
    order = topological_order(g)
    count = [0] * g.n
    for v in reversed(order):
        count[v] = 1 if v in g.targets else sum(count[u] for u in g.successors(v))
    return count[start]


def distance_to_targets(g: AttackGraph) -> list:
    """Per-node BFS hop count to the nearest target; None when unreachable."""
    pred = [[] for _ in range(g.n)]
    for src, dst in g.edges:
        pred[dst].append(src)
    dist = [None] * g.n
    frontier = sorted(g.targets)
    for t in frontier:
        dist[t] = 0
    d = 0
    while frontier:
        nxt = []
        d += 1
        for v in frontier:
            for w in pred[v]:
                if dist[w] is None:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def shortest_path_to_target(g: AttackGraph, start: int) -> list | None:
    """Minimum-edge path from `start` into the target set, or None.

    Among equal-length paths the lexicographically smallest node sequence is
    returned (greedy front-first choice over distance-decreasing successors).
    """
    dist = distance_to_targets(g)
    if dist[start] is None:
        return None
    path = [start]
    v = start
    while v not in g.targets:
        v = min(u for u in g.successors(v) if dist[u] == dist[v] - 1)
        path.append(v)
    return path


def betweenness_centrality(g: AttackGraph) -> np.ndarray:
    """Normalized shortest-path betweenness (directed, endpoints excluded).

    Brandes accumulation over every source; scores divided by (n-1)(n-2).
    All scores are 0 for n < 3.
    """
    n = g.n
    score = np.zeros(n)
    for s in range(n):
        # BFS shortest-path DAG from s
        dist = [-1] * n
        sigma = [0.0] * n
        preds = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1.0
        stack = []
        frontier = [s]
        while frontier:
            nxt = []
            for v in frontier:
                stack.append(v)
                for u in g.successors(v):
                    if dist[u] < 0:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
                    if dist[u] == dist[v] + 1:
                        sigma[u] += sigma[v]
                        preds[u].append(v)
            frontier = nxt
        delta = [0.0] * n
        for v in reversed(stack):
            for p in preds[v]:
                delta[p] += sigma[p] / sigma[v] * (1.0 + delta[v])
            if v != s:
                score[v] += delta[v]
    if n > 2:
        score /= (n - 1) * (n - 2)
    score.setflags(write=False)
    return score
