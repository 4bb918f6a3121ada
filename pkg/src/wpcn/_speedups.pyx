# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Bellman-backup hot loops; mirrors wpcn._kernels_py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def via_loop(const double[::1] r_tilde,
             const cnp.int64_t[::1] sa_offsets,
             const cnp.int64_t[::1] succ_offsets,
             const cnp.int64_t[::1] succ_states,
             const double[::1] succ_probs,
             double discount,
             double stop_tol,
             const double[::1] j_init,
             Py_ssize_t max_sweeps,
             double[::1] diff_trace):
    cdef Py_ssize_t n_states = sa_offsets.shape[0] - 1
    cdef cnp.ndarray[double, ndim=1] buf_a = np.array(j_init, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] buf_b = np.empty(n_states, dtype=np.float64)
    cdef double[::1] j = buf_a
    cdef double[::1] j_new = buf_b
    cdef double[::1] tmp
    cdef double one_minus = 1.0 - discount
    cdef Py_ssize_t sweep, s, r, t
    cdef double best, q, acc, diff, d

    for sweep in range(max_sweeps):
        diff = 0.0
        for s in range(n_states):
            best = -INFINITY
            for r in range(sa_offsets[s], sa_offsets[s + 1]):
                acc = 0.0
                for t in range(succ_offsets[r], succ_offsets[r + 1]):
                    acc += succ_probs[t] * j[succ_states[t]]
                q = one_minus * r_tilde[r] + discount * acc
                if q > best:
                    best = q
            j_new[s] = best
            d = fabs(best - j[s])
            if d > diff:
                diff = d
        tmp = j
        j = j_new
        j_new = tmp
        diff_trace[sweep] = diff
        if diff < stop_tol:
            return np.array(j, dtype=np.float64), sweep + 1
    return np.array(j, dtype=np.float64), -1


def greedy(const double[::1] r_tilde,
           const cnp.int64_t[::1] sa_offsets,
           const cnp.int64_t[::1] succ_offsets,
           const cnp.int64_t[::1] succ_states,
           const double[::1] succ_probs,
           double discount,
           const double[::1] j):
    cdef Py_ssize_t n_states = sa_offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n_states, dtype=np.int64)
    cdef cnp.int64_t[::1] policy = out
    cdef double one_minus = 1.0 - discount
    cdef Py_ssize_t s, r, t, arg
    cdef double best, q, acc

    for s in range(n_states):
        best = -INFINITY
        arg = sa_offsets[s]
        for r in range(sa_offsets[s], sa_offsets[s + 1]):
            acc = 0.0
            for t in range(succ_offsets[r], succ_offsets[r + 1]):
                acc += succ_probs[t] * j[succ_states[t]]
            q = one_minus * r_tilde[r] + discount * acc
            if q > best:
                best = q
                arg = r
        policy[s] = arg
    return out
