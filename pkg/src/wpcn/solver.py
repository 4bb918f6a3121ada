"""Generic finite constrained-MDP solver.

The unconstrained inner problem folds the energy cost into the reward as
r - beta * e and is solved by discounted value iteration; the multiplier
beta is then bracketed by doubling and refined by bisection until the
long-run average cost straddles the budget. The returned policy mixes the
two bracket policies with the weight that meets the budget exactly.

Policies are arrays of per-state local action indices (position within the
state's feasible-action list). Long-run averages are evaluated under the
stationary distribution of the policy-induced chain, per the standard
hybrid of a discounted inner criterion with average-cost accounting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import MultiChainWarning, NumericalError

__all__ = [
    "FiniteCmdp",
    "ViaResult",
    "MixedPolicy",
    "lagrangian_rewards",
    "value_iteration",
    "policy_transition",
    "stationary_distribution",
    "evaluate_policy",
    "evaluate_mixed",
    "solve_cmdp",
]


@dataclass
class FiniteCmdp:
    """Flattened finite CMDP.

    State s owns rows sa_offsets[s]:sa_offsets[s+1] of the per-(state,
    action) arrays; the successor distribution of each row is stored in
    CSR form (succ_offsets indexes into succ_states / succ_probs).
    """

    sa_offsets: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray
    succ_offsets: np.ndarray
    succ_states: np.ndarray
    succ_probs: np.ndarray
    discount: float

    def __post_init__(self):
        self.sa_offsets = np.ascontiguousarray(self.sa_offsets, dtype=np.int64)
        self.succ_offsets = np.ascontiguousarray(self.succ_offsets, dtype=np.int64)
        self.succ_states = np.ascontiguousarray(self.succ_states, dtype=np.int64)
        for name in ("rewards", "costs", "succ_probs"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if np.any(np.diff(self.sa_offsets) < 1):
            raise ValueError("every state needs at least one feasible action")
        if self.rewards.shape != (self.n_rows,) or self.costs.shape != (self.n_rows,):
            raise ValueError("reward/cost tables must have one entry per (state, action)")
        if np.any(np.diff(self.succ_offsets) < 1):
            raise ValueError("every (state, action) row needs a successor distribution")
        if np.any(self.succ_probs < 0.0) or np.any(self.succ_probs > 1.0 + 1e-12):
            raise ValueError("successor probabilities outside [0, 1]")
        if np.any(self.succ_states < 0) or np.any(self.succ_states >= self.n_states):
            raise ValueError("successor state index out of range")
        sums = np.add.reduceat(self.succ_probs, self.succ_offsets[:-1])
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ValueError("successor distributions must sum to 1")

    @property
    def n_states(self) -> int:
        return self.sa_offsets.shape[0] - 1

    @property
    def n_rows(self) -> int:
        return int(self.sa_offsets[-1])

    def actions_at(self, s: int) -> int:
        return int(self.sa_offsets[s + 1] - self.sa_offsets[s])

    def row(self, s: int, local_action: int) -> int:
        n = self.actions_at(s)
        if not 0 <= local_action < n:
            raise IndexError(f"action {local_action} out of range for state {s} ({n} actions)")
        return int(self.sa_offsets[s]) + int(local_action)

    def policy_rows(self, policy: np.ndarray) -> np.ndarray:
        policy = np.asarray(policy, dtype=np.int64)
        if policy.shape != (self.n_states,):
            raise ValueError("policy must assign one action per state")
        if np.any(policy < 0) or np.any(policy >= np.diff(self.sa_offsets)):
            raise ValueError("policy selects an infeasible action index")
        return self.sa_offsets[:-1] + policy


def lagrangian_rewards(cmdp: FiniteCmdp, beta: float) -> np.ndarray:
    """Penalized reward table r - beta * e over all (state, action) rows."""
    if beta < 0:
        raise ValueError("multiplier must be nonnegative")
    return cmdp.rewards - beta * cmdp.costs


@dataclass
class ViaResult:
    values: np.ndarray
    policy: np.ndarray       # local action index per state
    sweeps: int
    diffs: np.ndarray        # sup-norm change per sweep

    def bellman_residual(self) -> float:
        return float(self.diffs[-1]) if self.diffs.size else 0.0


def value_iteration(cmdp: FiniteCmdp, beta: float = 0.0, epsilon: float = 1e-9,
                    j_init: np.ndarray | None = None,
                    max_sweeps: int = 200_000) -> ViaResult:
    """Solve the beta-penalized unconstrained MDP by value iteration.

    Stops when successive iterates differ by less than
    epsilon * (1 - lam) / (2 lam) in sup norm, which makes the greedy
    policy epsilon-optimal; ties in the greedy step break toward the
    lowest action index.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    lam = cmdp.discount
    stop_tol = epsilon if lam == 0.0 else epsilon * (1.0 - lam) / (2.0 * lam)
    r_tilde = lagrangian_rewards(cmdp, beta)
    j0 = np.zeros(cmdp.n_states) if j_init is None else np.asarray(j_init, dtype=np.float64)
    diff_trace = np.empty(max_sweeps)
    values, sweeps = kernels.via_loop(
        r_tilde, cmdp.sa_offsets, cmdp.succ_offsets, cmdp.succ_states,
        cmdp.succ_probs, lam, stop_tol, j0, max_sweeps, diff_trace,
    )
    if sweeps < 0:
        raise NumericalError(
            f"value iteration did not reach tolerance {stop_tol:.3e} in "
            f"{max_sweeps} sweeps (last change {diff_trace[-1]:.3e})"
        )
    rows = kernels.greedy(
        r_tilde, cmdp.sa_offsets, cmdp.succ_offsets, cmdp.succ_states,
        cmdp.succ_probs, lam, values,
    )
    policy = rows - cmdp.sa_offsets[:-1]
    return ViaResult(values=values, policy=policy, sweeps=int(sweeps),
                     diffs=diff_trace[:sweeps].copy())


def policy_transition(cmdp: FiniteCmdp, policy: np.ndarray) -> np.ndarray:
    """Dense state-to-state matrix of the chain induced by a pure policy."""
    rows = cmdp.policy_rows(policy)
    n = cmdp.n_states
    p = np.zeros((n, n))
    for s, r in enumerate(rows):
        lo, hi = cmdp.succ_offsets[r], cmdp.succ_offsets[r + 1]
        p[s, cmdp.succ_states[lo:hi]] += cmdp.succ_probs[lo:hi]
    return p


def _closed_class_count(p: np.ndarray) -> int:
    support = p > 0.0
    n_comp, labels = connected_components(csr_matrix(support), directed=True,
                                          connection="strong")
    closed = 0
    for c in range(n_comp):
        inside = labels == c
        if not support[inside][:, ~inside].any():
            closed += 1
    return closed


def _stationary_dense(p: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Power iteration from the uniform start; falls back to the running
    Cesaro average when the plain iterates oscillate."""
    n = p.shape[0]
    if _closed_class_count(p) > 1:
        warnings.warn(
            "chain has multiple recurrent classes; returning the limit from "
            "the uniform start", MultiChainWarning, stacklevel=3,
        )
    x = np.full(n, 1.0 / n)
    avg = x.copy()
    for it in range(1, max_iter + 1):
        x_new = x @ p
        if np.max(np.abs(x_new - x)) <= tol:
            return x_new / x_new.sum()
        avg += (x_new - avg) / (it + 1.0)
        if it % 64 == 0 and np.max(np.abs(avg @ p - avg)) <= tol:
            return avg / avg.sum()
        x = x_new
    raise NumericalError(
        f"stationary distribution did not converge to {tol:.1e} within "
        f"{max_iter} iterations"
    )


def stationary_distribution(cmdp: FiniteCmdp, policy: np.ndarray,
                            tol: float = 1e-12, max_iter: int = 500_000) -> np.ndarray:
    """Stationary distribution of the policy-induced chain."""
    return _stationary_dense(policy_transition(cmdp, policy), tol, max_iter)


def evaluate_policy(cmdp: FiniteCmdp, policy: np.ndarray) -> tuple[float, float]:
    """Long-run average (reward, cost) per block under a pure policy."""
    rows = cmdp.policy_rows(policy)
    psi = stationary_distribution(cmdp, policy)
    return float(psi @ cmdp.rewards[rows]), float(psi @ cmdp.costs[rows])


@dataclass
class MixedPolicy:
    """Randomized mixture of the two bracket policies.

    policy_hi is the greedy policy at the upper bracket multiplier beta_hi
    (average cost within budget) and is played with probability q;
    policy_lo belongs to beta_lo (cost above budget, higher reward) and is
    played with probability 1 - q. With a binding budget,
    q * cost_hi + (1 - q) * cost_lo equals the budget by construction.
    """

    policy_hi: np.ndarray
    policy_lo: np.ndarray
    q: float
    beta_lo: float
    beta_hi: float
    reward: float
    cost: float
    reward_hi: float
    cost_hi: float
    reward_lo: float
    cost_lo: float
    budget_binds: bool
    beta_trace: list = field(default_factory=list, repr=False)

    def pure(self) -> bool:
        return self.q == 1.0 and np.array_equal(self.policy_hi, self.policy_lo)


def evaluate_mixed(cmdp: FiniteCmdp, mixed: MixedPolicy,
                   tol: float = 1e-12, max_iter: int = 500_000) -> tuple[float, float]:
    """Average (reward, cost) of the per-block randomized policy.

    The block-wise coin makes the chain evolve under the blended kernel
    q * P_hi + (1 - q) * P_lo; this is the quantity a long rollout of the
    mixture converges to, which in general differs slightly from the
    q-weighted average of the two pure policies' own long-run values.
    """
    rows_hi = cmdp.policy_rows(mixed.policy_hi)
    rows_lo = cmdp.policy_rows(mixed.policy_lo)
    q = mixed.q
    p = q * policy_transition(cmdp, mixed.policy_hi) \
        + (1.0 - q) * policy_transition(cmdp, mixed.policy_lo)
    psi = _stationary_dense(p, tol, max_iter)
    r = q * cmdp.rewards[rows_hi] + (1.0 - q) * cmdp.rewards[rows_lo]
    e = q * cmdp.costs[rows_hi] + (1.0 - q) * cmdp.costs[rows_lo]
    return float(psi @ r), float(psi @ e)


def solve_cmdp(cmdp: FiniteCmdp, e_budget: float, epsilon_beta: float = 1e-4,
               epsilon_via: float = 1e-9, max_doublings: int = 60,
               warm_start: bool = True) -> MixedPolicy:
    """Maximize long-run average reward subject to average cost <= budget.

    If the unconstrained (beta = 0) policy already meets the budget it is
    returned with q = 1. Otherwise the multiplier is bracketed by doubling
    from 1 until the cost falls within budget, then bisected to width
    epsilon_beta; the two bracket policies are mixed with the weight that
    meets the budget exactly.
    """
    if e_budget < 0:
        raise ValueError("energy budget must be nonnegative")
    if epsilon_beta <= 0:
        raise ValueError("epsilon_beta must be positive")

    trace: list[tuple[float, float]] = []

    def solve_point(beta: float, j_warm):
        res = value_iteration(cmdp, beta, epsilon_via, j_init=j_warm)
        r, e = evaluate_policy(cmdp, res.policy)
        trace.append((beta, e))
        return res, r, e

    res0, r0, e0 = solve_point(0.0, None)
    if e0 <= e_budget:
        return MixedPolicy(
            policy_hi=res0.policy.copy(), policy_lo=res0.policy.copy(), q=1.0,
            beta_lo=0.0, beta_hi=0.0, reward=r0, cost=e0,
            reward_hi=r0, cost_hi=e0, reward_lo=r0, cost_lo=e0,
            budget_binds=False, beta_trace=trace,
        )

    beta_lo, res_lo, r_lo, e_lo = 0.0, res0, r0, e0
    warm = res0.values if warm_start else None
    beta_hi = 1.0
    for _ in range(max_doublings):
        res_hi, r_hi, e_hi = solve_point(beta_hi, warm)
        warm = res_hi.values if warm_start else None
        if e_hi <= e_budget:
            break
        beta_lo, res_lo, r_lo, e_lo = beta_hi, res_hi, r_hi, e_hi
        beta_hi *= 2.0
    else:
        raise NumericalError(
            f"no multiplier up to {beta_hi:.3e} meets the budget {e_budget!r}; "
            "the model should admit a zero-cost action"
        )

    while beta_hi - beta_lo >= epsilon_beta:
        mid = 0.5 * (beta_lo + beta_hi)
        res_mid, r_mid, e_mid = solve_point(mid, warm)
        warm = res_mid.values if warm_start else None
        if e_mid <= e_budget:
            beta_hi, res_hi, r_hi, e_hi = mid, res_mid, r_mid, e_mid
        else:
            beta_lo, res_lo, r_lo, e_lo = mid, res_mid, r_mid, e_mid

    # empirical monotonicity diagnostic: cost should not rise with beta
    by_beta = sorted(trace)
    for (b1, c1), (b2, c2) in zip(by_beta, by_beta[1:]):
        if b2 > b1 and c2 > c1 + 1e-9 * max(1.0, abs(c1)):
            warnings.warn(
                f"average cost rose from {c1:.6e} to {c2:.6e} as the multiplier "
                f"grew from {b1:.6e} to {b2:.6e}", stacklevel=2,
            )
            break

    q = (e_lo - e_budget) / (e_lo - e_hi)
    if not 0.0 <= q <= 1.0:
        raise NumericalError(
            f"mixing weight {q!r} outside [0, 1]: bracket costs "
            f"({e_hi!r}, {e_lo!r}) do not straddle the budget {e_budget!r}"
        )
    return MixedPolicy(
        policy_hi=res_hi.policy.copy(), policy_lo=res_lo.policy.copy(), q=float(q),
        beta_lo=beta_lo, beta_hi=beta_hi,
        reward=float(q * r_hi + (1.0 - q) * r_lo),
        cost=float(q * e_hi + (1.0 - q) * e_lo),
        reward_hi=r_hi, cost_hi=e_hi, reward_lo=r_lo, cost_lo=e_lo,
        budget_binds=True, beta_trace=trace,
    )
