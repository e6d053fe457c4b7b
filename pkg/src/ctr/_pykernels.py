"""Pure-Python backward-induction kernels (fallback lane).

Mirrors ctr._ckernels operation for operation; both lanes must produce
bit-identical outputs, so the arithmetic expressions and their evaluation
order are kept in lockstep with the Cython source.

State layout: s = v*(cmax+1) + c for node v and step counter c, followed by
the sink (detection) and expired (out-of-time) absorbing slots. alpha[c] is
the conditional advance probability at counter c; q[v] is the probability
that occupying node v diverts to the sink (0 = base kernel, {0,1} indicator
= deployment kernel, fractional = belief kernel).
"""


def best_response_kernel(indptr, edge_dst, is_target, alpha, q, cmax, values, policy):
    """Optimal value and argmax policy; ties keep the lowest out-edge."""
    n = len(indptr) - 1
    K = cmax + 1
    ip = [int(x) for x in indptr]
    ed = [int(x) for x in edge_dst]
    tgt = [bool(x) for x in is_target]
    al = [float(x) for x in alpha]
    qq = [float(x) for x in q]
    val = [0.0] * (n * K + 2)
    pol = [-1] * (n * K + 2)
    for v in range(n):
        if tgt[v]:
            base = v * K
            for c in range(K):
                val[base + c] = 1.0
    for c in range(cmax, -1, -1):
        ac = al[c]
        for v in range(n):
            if tgt[v]:
                continue
            e0 = ip[v]
            e1 = ip[v + 1]
            if e0 == e1:
                continue
            s = v * K + c
            if c == cmax:
                # advancing would exceed the step horizon: every action
                # expires, all values tie at 0, lowest edge wins
                pol[s] = e0
                continue
            w = (1.0 - qq[v]) * ac
            best = -1.0
            best_edge = -1
            for e in range(e0, e1):
                x = w * val[ed[e] * K + c + 1]
                if x > best:
                    best = x
                    best_edge = e
            val[s] = best
            pol[s] = best_edge
    values[:] = val
    policy[:] = pol


def policy_eval_kernel(indptr, edge_dst, is_target, alpha, q, cmax, policy, values):
    """Fixed-policy value; states whose play is undefined evaluate to NaN."""
    n = len(indptr) - 1
    K = cmax + 1
    ip = [int(x) for x in indptr]
    ed = [int(x) for x in edge_dst]
    tgt = [bool(x) for x in is_target]
    al = [float(x) for x in alpha]
    qq = [float(x) for x in q]
    pol = [int(x) for x in policy]
    nan = float("nan")
    val = [0.0] * (n * K + 2)
    for v in range(n):
        if tgt[v]:
            base = v * K
            for c in range(K):
                val[base + c] = 1.0
    for c in range(cmax, -1, -1):
        ac = al[c]
        for v in range(n):
            if tgt[v]:
                continue
            e0 = ip[v]
            e1 = ip[v + 1]
            if e0 == e1:
                continue
            if qq[v] == 1.0:
                continue
            if c == cmax:
                continue
            s = v * K + c
            e = pol[s]
            if e < 0:
                val[s] = nan
                continue
            w = (1.0 - qq[v]) * ac
            if w == 0.0:
                continue
            val[s] = w * val[ed[e] * K + c + 1]
    values[:] = val
