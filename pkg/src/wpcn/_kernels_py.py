"""Pure numpy implementation of the Bellman-backup hot loops.

Semantics match the compiled module in wpcn._speedups: segment sums run
left to right within each CSR row and argmax ties resolve to the lowest
row index, so both backends produce identical policies.
"""

from __future__ import annotations

import numpy as np


def via_loop(r_tilde, sa_offsets, succ_offsets, succ_states, succ_probs,
             discount, stop_tol, j_init, max_sweeps, diff_trace):
    """Iterate the Bellman optimality operator until the sup-norm change
    drops below stop_tol. Returns (values, sweeps); sweeps is -1 when the
    cap was hit. diff_trace[:sweeps] receives the per-sweep changes."""
    j = np.array(j_init, dtype=np.float64)
    sa_starts = sa_offsets[:-1]
    row_starts = succ_offsets[:-1]
    base = (1.0 - discount) * r_tilde
    for sweep in range(int(max_sweeps)):
        expected = np.add.reduceat(succ_probs * j[succ_states], row_starts)
        q = base + discount * expected
        j_new = np.maximum.reduceat(q, sa_starts)
        diff = float(np.max(np.abs(j_new - j)))
        diff_trace[sweep] = diff
        j = j_new
        if diff < stop_tol:
            return j, sweep + 1
    return j, -1


def greedy(r_tilde, sa_offsets, succ_offsets, succ_states, succ_probs,
           discount, j):
    """Row index of the greedy action per state (first maximum wins)."""
    expected = np.add.reduceat(succ_probs * j[succ_states], succ_offsets[:-1])
    q = (1.0 - discount) * r_tilde + discount * expected
    sa_starts = sa_offsets[:-1]
    counts = np.diff(sa_offsets)
    best = np.maximum.reduceat(q, sa_starts)
    n_rows = q.shape[0]
    candidates = np.where(q == np.repeat(best, counts), np.arange(n_rows), n_rows)
    return np.minimum.reduceat(candidates, sa_starts).astype(np.int64)
