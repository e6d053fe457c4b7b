# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward-induction kernels (hot lane).

Keep every arithmetic expression identical to ctr._pykernels: the two lanes
are contractually bit-identical and the test suite compares them.
"""

from libc.math cimport NAN

import numpy as np

cimport numpy as cnp


def best_response_kernel(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] edge_dst,
                         const cnp.uint8_t[::1] is_target,
                         const double[::1] alpha, const double[::1] q, Py_ssize_t cmax,
                         double[::1] values, cnp.int64_t[::1] policy):
    """Optimal value and argmax policy; ties keep the lowest out-edge."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t K = cmax + 1
    cdef Py_ssize_t S = n * K + 2
    cdef Py_ssize_t v, c, s, e, e0, e1, base
    cdef Py_ssize_t best_edge
    cdef double ac, w, x, best

    for s in range(S):
        values[s] = 0.0
        policy[s] = -1
    for v in range(n):
        if is_target[v]:
            base = v * K
            for c in range(K):
                values[base + c] = 1.0
    for c in range(cmax, -1, -1):
        ac = alpha[c]
        for v in range(n):
            if is_target[v]:
                continue
            e0 = indptr[v]
            e1 = indptr[v + 1]
            if e0 == e1:
                continue
            s = v * K + c
            if c == cmax:
                # advancing would exceed the step horizon: every action
                # expires, all values tie at 0, lowest edge wins
                policy[s] = e0
                continue
            w = (1.0 - q[v]) * ac
            best = -1.0
            best_edge = -1
            for e in range(e0, e1):
                x = w * values[edge_dst[e] * K + c + 1]
                if x > best:
                    best = x
                    best_edge = e
            values[s] = best
            policy[s] = best_edge


def policy_eval_kernel(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] edge_dst,
                       const cnp.uint8_t[::1] is_target,
                       const double[::1] alpha, const double[::1] q, Py_ssize_t cmax,
                       const cnp.int64_t[::1] policy, double[::1] values):
    """Fixed-policy value; states whose play is undefined evaluate to NaN."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t K = cmax + 1
    cdef Py_ssize_t S = n * K + 2
    cdef Py_ssize_t v, c, s, e0, e1, base
    cdef cnp.int64_t e
    cdef double ac, w

    for s in range(S):
        values[s] = 0.0
    for v in range(n):
        if is_target[v]:
            base = v * K
            for c in range(K):
                values[base + c] = 1.0
    for c in range(cmax, -1, -1):
        ac = alpha[c]
        for v in range(n):
            if is_target[v]:
                continue
            e0 = indptr[v]
            e1 = indptr[v + 1]
            if e0 == e1:
                continue
            if q[v] == 1.0:
                continue
            if c == cmax:
                continue
            s = v * K + c
            e = policy[s]
            if e < 0:
                values[s] = NAN
                continue
            w = (1.0 - q[v]) * ac
            if w == 0.0:
                continue
            values[s] = w * values[edge_dst[e] * K + c + 1]
