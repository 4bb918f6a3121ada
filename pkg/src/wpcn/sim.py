"""Monte-Carlo rollout of pure or mixed policies.

Rollouts use a seeded numpy PCG64 generator, so trajectories are exactly
reproducible. All uniform draws are generated up front in a fixed order
(the per-block policy coins of a mixture first, then the per-block
transition draws), which keeps trajectories bit-for-bit stable across
backends and numpy releases of the same generator family.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .solver import FiniteCmdp, MixedPolicy
from .system import WpcnModel

__all__ = [
    "RNG_ALGORITHM",
    "Trajectory",
    "DiscountedEstimate",
    "rollout",
    "discounted_estimate",
    "batch_mean_se",
    "trajectory_to_csv",
]

RNG_ALGORITHM = "numpy-PCG64"

TRAJECTORY_COLUMNS = ["t", "h", "b", "tauE", "tauI", "PE", "PI", "reward_bits", "cost_J"]


@dataclass
class Trajectory:
    """Per-block record of one rollout. Block t (1-based) was played from
    states[t-1] with the feasible-action row rows[t-1]."""

    seed: int
    horizon: int
    states: np.ndarray     # state index at each block
    rows: np.ndarray       # flat (state, action) row chosen each block
    rewards: np.ndarray
    costs: np.ndarray
    rng_algorithm: str = RNG_ALGORITHM


def _row_cumulative(cmdp: FiniteCmdp) -> np.ndarray:
    cs = np.cumsum(cmdp.succ_probs)
    starts = cmdp.succ_offsets[:-1]
    counts = np.diff(cmdp.succ_offsets)
    before = cs[starts] - cmdp.succ_probs[starts]
    return cs - np.repeat(before, counts)


def rollout(cmdp: FiniteCmdp, policy, s0: int, horizon: int, seed: int) -> Trajectory:
    """Simulate `horizon` blocks starting from state s0.

    `policy` is either a per-state action array or a MixedPolicy, whose
    coin is re-tossed every block (probability q selects the high-
    multiplier bracket policy).
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not 0 <= s0 < cmdp.n_states:
        raise ValueError(f"initial state {s0} out of range")
    rng = np.random.default_rng(seed)
    if isinstance(policy, MixedPolicy):
        rows_hi = cmdp.policy_rows(policy.policy_hi)
        rows_lo = cmdp.policy_rows(policy.policy_lo)
        pick_hi = rng.random(horizon) < policy.q
    else:
        rows_hi = rows_lo = cmdp.policy_rows(np.asarray(policy))
        pick_hi = None
    step_u = rng.random(horizon)

    row_cum = _row_cumulative(cmdp)
    succ_offsets = cmdp.succ_offsets
    succ_states = cmdp.succ_states

    states = np.empty(horizon, dtype=np.int64)
    rows = np.empty(horizon, dtype=np.int64)
    s = s0
    for t in range(horizon):
        states[t] = s
        if pick_hi is None or pick_hi[t]:
            r = rows_hi[s]
        else:
            r = rows_lo[s]
        rows[t] = r
        lo, hi = succ_offsets[r], succ_offsets[r + 1]
        pos = int(np.searchsorted(row_cum[lo:hi], step_u[t], side="right"))
        if pos >= hi - lo:  # guard the 1.0-cumulative rounding edge
            pos = int(hi - lo - 1)
        s = int(succ_states[lo + pos])
    return Trajectory(
        seed=seed, horizon=horizon, states=states, rows=rows,
        rewards=cmdp.rewards[rows].copy(), costs=cmdp.costs[rows].copy(),
    )


@dataclass
class DiscountedEstimate:
    reward: float
    cost: float
    reward_tail_bound: float  # truncation error bound lam^(N+1) * max|r|
    cost_tail_bound: float


def discounted_estimate(traj: Trajectory, lam: float) -> DiscountedEstimate:
    """Truncated discounted objectives (1 - lam) * sum_{t=1..N} lam^t x_t."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("discount must be in [0, 1)")
    n = traj.horizon
    weights = lam ** np.arange(1, n + 1)
    tail = lam ** (n + 1)
    return DiscountedEstimate(
        reward=float((1.0 - lam) * np.dot(weights, traj.rewards)),
        cost=float((1.0 - lam) * np.dot(weights, traj.costs)),
        reward_tail_bound=float(tail * np.max(np.abs(traj.rewards), initial=0.0)),
        cost_tail_bound=float(tail * np.max(np.abs(traj.costs), initial=0.0)),
    )


def batch_mean_se(samples: np.ndarray, n_batches: int = 1000) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated sequence.

    Consecutive samples from a Markov chain are autocorrelated, so the
    naive std/sqrt(N) understates the error of the mean; batch means over
    blocks much longer than the mixing time restore a valid estimate.
    """
    samples = np.asarray(samples, dtype=float)
    n_batches = min(n_batches, samples.size)
    usable = (samples.size // n_batches) * n_batches
    means = samples[:usable].reshape(n_batches, -1).mean(axis=1)
    se = float(means.std(ddof=1) / np.sqrt(n_batches)) if n_batches > 1 else float("inf")
    return float(samples.mean()), se


def trajectory_to_csv(traj: Trajectory, model: WpcnModel, path) -> None:
    """Write one row per block: t, h, b, tauE, tauI, PE, PI, reward_bits, cost_J."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for t in range(traj.horizon):
            state = model.state_of(int(traj.states[t]))
            action = model.action_of_row(int(traj.rows[t]))
            writer.writerow([
                t + 1, state.h, state.b,
                repr(action.tau_e), repr(action.tau_i),
                repr(action.p_e), repr(action.p_i),
                repr(float(traj.rewards[t])), repr(float(traj.costs[t])),
            ])
