"""Bundled synthetic graph family for sweeps and qualitative benchmarks.

The case-study topologies from the literature are not fully published, so
sweeps and the heuristic-gap checks run on this high-redundancy family
instead: one entry, `vectors` independent attack vectors, each with a short
direct route plus two redundant long routes that merge in a shared choke
node. Shortest-path reasoning fixates on the direct routes while the choke
nodes are where protection actually pays, which is the qualitative regime
the redundant case study exhibits.
"""


def high_redundancy_document(vectors: int = 4) -> dict:
    """Graph document with 1 + 4*vectors nodes and 5*vectors edges.

    Vector i: entry -> s_i -> t_i (short), entry -> p_i -> q_i -> t_i and
    entry -> r_i -> q_i -> t_i (long, redundant through choke q_i). All
    intermediate nodes are watchable.
    """
    if vectors < 1:
        raise ValueError("need at least one vector")
    nodes = [{"id": 0, "label": "entry"}]
    edges = []
    spot = []
    targets = []
    nid = 1
    for i in range(vectors):
        s, p, q, r, t = nid, nid + 1, nid + 2, nid + 3, nid + 4
        nid += 5
        nodes += [
            {"id": s, "label": f"s{i}"},
            {"id": p, "label": f"p{i}"},
            {"id": q, "label": f"q{i}"},
            {"id": r, "label": f"r{i}"},
            {"id": t, "label": f"t{i}"},
        ]
        edges += [[0, s], [s, t], [0, p], [p, q], [q, t], [0, r], [r, q]]
        spot += [s, p, q, r]
        targets.append(t)
    return {
        "nodes": nodes,
        "edges": edges,
        "entries": [0],
        "targets": targets,
        "spot": spot,
    }
