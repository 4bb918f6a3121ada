"""Shared oracle helpers: random CMDP instances and exact policy evaluation
by linear solves, independent of the value-iteration path under test."""

import itertools

import numpy as np

from wpcn.solver import FiniteCmdp


def random_cmdp(rng, max_states=8, max_actions=4, discount=0.9,
                max_policies=20000):
    """Random dense-support finite CMDP with O(1) rewards and costs.

    The per-state action counts are redrawn until the number of pure
    policies stays below max_policies so exhaustive enumeration is cheap.
    """
    while True:
        n_states = int(rng.integers(2, max_states + 1))
        counts = rng.integers(1, max_actions + 1, size=n_states)
        n_pol = int(np.prod(counts))
        if n_pol <= max_policies:
            break
    sa_offsets = np.zeros(n_states + 1, dtype=np.int64)
    np.cumsum(counts, out=sa_offsets[1:])
    n_rows = int(sa_offsets[-1])
    rewards = rng.random(n_rows)
    costs = rng.random(n_rows)
    succ_offsets = np.arange(n_rows + 1, dtype=np.int64) * n_states
    succ_states = np.tile(np.arange(n_states, dtype=np.int64), n_rows)
    probs = rng.random((n_rows, n_states)) + 1e-3
    probs /= probs.sum(axis=1, keepdims=True)
    return FiniteCmdp(
        sa_offsets=sa_offsets, rewards=rewards, costs=costs,
        succ_offsets=succ_offsets, succ_states=succ_states,
        succ_probs=probs.ravel(), discount=discount,
    )


def dense_rows(cmdp):
    """Dense successor matrix, one row per (state, action) pair."""
    out = np.zeros((cmdp.n_rows, cmdp.n_states))
    for r in range(cmdp.n_rows):
        lo, hi = cmdp.succ_offsets[r], cmdp.succ_offsets[r + 1]
        out[r, cmdp.succ_states[lo:hi]] += cmdp.succ_probs[lo:hi]
    return out


def all_policies(cmdp):
    """Array of every pure policy (local action indices), lexicographic."""
    counts = np.diff(cmdp.sa_offsets)
    combos = itertools.product(*(range(int(c)) for c in counts))
    return np.array(list(combos), dtype=np.int64)


def exact_policy_values(cmdp, policies, beta=0.0):
    """Discounted values of each policy by batched exact linear solves:
    J = (I - lam P)^-1 (1 - lam) r_tilde."""
    lam = cmdp.discount
    r_tilde = cmdp.rewards - beta * cmdp.costs
    dense = dense_rows(cmdp)
    rows = cmdp.sa_offsets[:-1][None, :] + policies        # (n_pol, n_states)
    p_mu = dense[rows]                                     # (n_pol, n, n)
    r_mu = r_tilde[rows]
    eye = np.eye(cmdp.n_states)[None, :, :]
    return np.linalg.solve(eye - lam * p_mu, (1.0 - lam) * r_mu[..., None])[..., 0]


def enumeration_optimum(cmdp, beta=0.0):
    """Pointwise-max discounted value over all pure policies and the
    maximizing policy (ties to the lexicographically first)."""
    policies = all_policies(cmdp)
    values = exact_policy_values(cmdp, policies, beta)
    best = int(np.argmax(values.sum(axis=1)))
    return values.max(axis=0), policies[best]
