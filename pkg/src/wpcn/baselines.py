"""Myopic benchmark: maximize the current block's throughput only."""

from __future__ import annotations

import numpy as np

from .system import WpcnModel

__all__ = ["myopic_policy"]


def myopic_policy(model: WpcnModel, e_budget: float) -> np.ndarray:
    """Per-state argmax of the immediate reward over actions whose block
    cost stays within the budget.

    Reward ties resolve toward the action that leaves the most energy in
    the battery (largest harvested minus spent), then toward the lowest
    action index. The all-zero action costs nothing, so the affordable set
    is never empty.
    """
    if e_budget < 0:
        raise ValueError("energy budget must be nonnegative")
    policy = np.empty(model.n_states, dtype=np.int64)
    for s in range(model.n_states):
        rows = model.state_rows(s)
        cost = model.costs[rows]
        affordable = np.flatnonzero(cost <= e_budget)
        if affordable.size == 0:
            raise AssertionError(f"state {s} has no affordable action at budget {e_budget}")
        reward = model.rewards[rows][affordable]
        best = affordable[reward == reward.max()]
        if best.size > 1:
            retained = (model.harvested[rows] - model.spent[rows])[best]
            best = best[retained == retained.max()]
        policy[s] = best[0]
    return policy
