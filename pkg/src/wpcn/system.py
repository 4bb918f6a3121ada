"""Joint channel/battery model of the wireless-powered link.

A system state pairs a channel state h in {1..K} with a battery level
b in {0..L}. An action is a quadruple (tau_e, tau_i, p_e, p_i): durations
of the downlink energy-transfer and uplink data slots, the access-point
transmit power, and the device transmit power. This module defines the
per-block reward (bits) and energy cost (joules), action feasibility, the
deterministic battery update, and dense (state, action) tables consumed by
the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .channel import ChannelModel, rician_pdf
from .errors import ModelValidityError, NumericalError

__all__ = [
    "SystemParams",
    "SystemState",
    "Action",
    "ActionGrid",
    "WpcnModel",
    "energy_harvested",
    "energy_spent_it",
    "immediate_cost",
    "immediate_reward",
    "feasible_actions",
    "battery_successor",
    "transition_kernel",
    "build_model",
]

# relative slack for timing/power bound checks on float-valued actions
_REL_SLACK = 1e-12
# battery deltas within this many quanta of an integer snap to it, so the
# floor() at quantum boundaries is immune to rounding noise
_QUANTUM_SNAP = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Scalar system parameters (SI units).

    Pmax_E   max access-point transmit power during energy transfer (W)
    Pc_AP    access-point circuit power (W)
    Pc_U     device circuit power (W)
    eff_AP   access-point power-amplifier efficiency, in (0, 1]
    eff_U    device power-amplifier efficiency, in (0, 1]
    eta      RF-to-DC energy conversion efficiency, in (0, 1]
    lam      per-block survival/discount factor, in [0, 1)
    G_A      access-point antenna gain (linear)
    zeta     SNR gap of the practical modulation/coding scheme, >= 1
    W        bandwidth (Hz)
    N0       noise power density (W/Hz)
    d        access-point to device distance (m)
    alpha    path-loss exponent
    T        block duration (s)
    Bmax     battery capacity (J), must equal L * Q
    Q        battery quantum (J)
    Eth      per-block average energy budget (J)
    """

    Pmax_E: float
    Pc_AP: float
    Pc_U: float
    eff_AP: float
    eff_U: float
    eta: float
    lam: float
    G_A: float
    zeta: float
    W: float
    N0: float
    d: float
    alpha: float
    T: float
    Bmax: float
    Q: float
    Eth: float

    def __post_init__(self):
        for name in ("Pmax_E", "Pc_AP", "Pc_U", "Eth"):
            if getattr(self, name) < 0:
                raise ModelValidityError(f"{name} must be nonnegative")
        for name in ("eff_AP", "eff_U", "eta"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ModelValidityError(f"{name} must be in (0, 1], got {v}")
        if not 0.0 <= self.lam < 1.0:
            raise ModelValidityError(f"lam must be in [0, 1), got {self.lam}")
        if self.zeta < 1.0:
            raise ModelValidityError(f"zeta must be >= 1, got {self.zeta}")
        for name in ("G_A", "W", "N0", "d", "T", "Bmax", "Q"):
            if getattr(self, name) <= 0:
                raise ModelValidityError(f"{name} must be positive")
        ratio = self.Bmax / self.Q
        if abs(ratio - round(ratio)) > 1e-9:
            raise ModelValidityError(
                f"Bmax must be an integer number of quanta: Bmax/Q = {ratio!r}"
            )

    @property
    def levels(self) -> int:
        """Number of battery quanta L, with Bmax = L * Q."""
        return int(round(self.Bmax / self.Q))

    @property
    def sigma2(self) -> float:
        """Thermal noise power N0 * W."""
        return self.N0 * self.W

    @property
    def b_ref(self) -> float:
        """Reference battery energy for small devices, 1e-3 * T joules."""
        return 1e-3 * self.T

    @classmethod
    def defaults(cls, **overrides) -> "SystemParams":
        """Baseline parameter set (8 dBi antenna, -164 dBm/Hz noise floor,
        16 ms blocks, 10-quantum battery, 500x reference energy budget)."""
        t_block = 0.016
        b_ref = 1e-3 * t_block
        values = dict(
            Pmax_E=10.0,
            Pc_AP=0.5,
            Pc_U=0.005,
            eff_AP=0.9,
            eff_U=0.9,
            eta=0.95,
            lam=0.9,
            G_A=10.0 ** 0.8,
            zeta=1.0,
            W=2000.0,
            N0=10.0 ** -19.4,
            d=10.0,
            alpha=2.8,
            T=t_block,
            Bmax=10.0 * b_ref,
            Q=b_ref,
            Eth=500.0 * b_ref,
        )
        values.update(overrides)
        return cls(**values)


class SystemState(NamedTuple):
    h: int  # channel state, 1..K
    b: int  # battery level, 0..L


class Action(NamedTuple):
    tau_e: float  # energy-transfer duration (s)
    tau_i: float  # data-transfer duration (s)
    p_e: float    # access-point transmit power (W)
    p_i: float    # device transmit power (W)


@dataclass(frozen=True)
class ActionGrid:
    """Enumerated candidate actions, shape (n, 4) with columns
    (tau_e, tau_i, p_e, p_i).

    The enumeration order (tau_e, then tau_i, then p_e, then p_i, each
    ascending) is fixed: solver tie-breaking and policy fingerprints
    depend on it.
    """

    actions: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.actions, dtype=float)
        if a.ndim != 2 or a.shape[1] != 4:
            raise ValueError("actions must have shape (n, 4)")
        if not np.any(np.all(a == 0.0, axis=1)):
            raise ModelValidityError("action grid must contain the all-zero action")
        a.setflags(write=False)
        object.__setattr__(self, "actions", a)

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    def action(self, idx: int) -> Action:
        return Action(*self.actions[idx])

    @classmethod
    def from_actions(cls, actions) -> "ActionGrid":
        return cls(np.array([tuple(a) for a in actions], dtype=float))

    @classmethod
    def from_levels(cls, params: SystemParams, v_tau_e: int = 9, v_tau_i: int = 9,
                    v_p_e: int = 5, v_p_i: int = 9, p_i_min: float = 1e-5) -> "ActionGrid":
        """Default grid: uniform time fractions with tau_e + tau_i <= T,
        uniform p_e levels up to Pmax_E, and log-spaced p_i levels from
        p_i_min up to the largest power that drains a full battery within
        the shortest positive data slot (plus the zero level)."""
        if min(v_tau_e, v_tau_i) < 2 or v_p_e < 2 or v_p_i < 1:
            raise ModelValidityError("grid needs >= 2 time/power levels per dimension")
        tau_min = params.T / (v_tau_i - 1)
        p_i_cap = params.eff_U * (params.Bmax / tau_min - params.Pc_U)
        if p_i_cap <= p_i_min:
            raise ModelValidityError(
                f"battery too small for the p_i grid: cap {p_i_cap:.3e} W "
                f"<= floor {p_i_min:.3e} W"
            )
        pe_levels = np.linspace(0.0, params.Pmax_E, v_p_e)
        pi_levels = np.concatenate([[0.0], np.geomspace(p_i_min, p_i_cap, v_p_i)])
        rows = []
        for ie in range(v_tau_e):
            tau_e = params.T * ie / (v_tau_e - 1)
            for ii in range(v_tau_i):
                if ie / (v_tau_e - 1) + ii / (v_tau_i - 1) > 1.0:
                    continue
                tau_i = params.T * ii / (v_tau_i - 1)
                for p_e in pe_levels:
                    for p_i in pi_levels:
                        rows.append((tau_e, tau_i, p_e, p_i))
        return cls(np.array(rows))


def energy_harvested(state: SystemState, action: Action, params: SystemParams,
                     channel: ChannelModel) -> float:
    """Energy added to the battery this block, clamped at capacity."""
    stored = state.b * params.Q
    gain = channel.rep_gains[state.h - 1]
    raw = params.eta * params.G_A * action.p_e * action.tau_e * gain
    return min(stored + raw, params.Bmax) - stored


def energy_spent_it(action: Action, params: SystemParams) -> float:
    """Battery energy drawn during the data slot (amplifier plus circuit)."""
    return action.tau_i * (action.p_i / params.eff_U + params.Pc_U)


def immediate_cost(state: SystemState, action: Action, params: SystemParams,
                   channel: ChannelModel) -> float:
    """Net system energy drawn this block (access point plus device,
    battery accumulation credited back). Nonnegative for every feasible
    action of a valid parameter set; build_model() enforces this."""
    ap = action.p_e * action.tau_e / params.eff_AP + params.Pc_AP * action.tau_e
    return ap + energy_spent_it(action, params) - energy_harvested(state, action, params, channel)


def _rate_integral(k: int, p_i: float, params: SystemParams,
                   channel: ChannelModel) -> float:
    """Spectral efficiency (bits/s/Hz) averaged over fading bin k."""
    if p_i == 0.0:
        return 0.0
    lo, hi = channel.bin_bounds(k)
    coeff = p_i * params.d ** (-params.alpha) / (params.zeta * params.sigma2)

    def integrand(t):
        return math.log2(1.0 + coeff * t) * rician_pdf(t, channel.fading)

    # full_output suppresses QUADPACK's printed roundoff notice; the error
    # estimate is still checked below
    out = quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-11, limit=400,
               full_output=1)
    val, err = out[0], out[1]
    if err > 1e-8 * max(1.0, abs(val)):
        raise NumericalError(
            f"rate quadrature error {err:.3e} on bin {k} at p_i={p_i!r}"
        )
    return val * channel.n_states


def immediate_reward(state: SystemState, action: Action, params: SystemParams,
                     channel: ChannelModel) -> float:
    """Bits delivered this block, averaged over the fading bin of state h."""
    if action.tau_i == 0.0 or action.p_i == 0.0:
        return 0.0
    return action.tau_i * params.W * _rate_integral(state.h, action.p_i, params, channel)


def _grid_energy_columns(state_b: int, gain: float, grid: ActionGrid,
                         params: SystemParams):
    """Vectorized harvested/spent energy for every grid action at one state."""
    a = grid.actions
    stored = state_b * params.Q
    raw = params.eta * params.G_A * a[:, 2] * a[:, 0] * gain
    harvested = np.minimum(stored + raw, params.Bmax) - stored
    spent = a[:, 1] * (a[:, 3] / params.eff_U + params.Pc_U)
    return harvested, spent


def feasible_actions(state: SystemState, params: SystemParams,
                     channel: ChannelModel, grid: ActionGrid) -> np.ndarray:
    """Indices of grid actions feasible at the state: timing and power
    bounds plus the battery constraint spent <= harvested + stored."""
    a = grid.actions
    gain = channel.rep_gains[state.h - 1]
    harvested, spent = _grid_energy_columns(state.b, gain, grid, params)
    ok = (
        (a[:, 0] + a[:, 1] <= params.T * (1.0 + _REL_SLACK))
        & (a[:, 2] <= params.Pmax_E * (1.0 + _REL_SLACK))
        & (np.min(a, axis=1) >= 0.0)
        & (spent <= harvested + state.b * params.Q)
    )
    return np.flatnonzero(ok)


def battery_successor(state: SystemState, action: Action, params: SystemParams,
                      channel: ChannelModel) -> int:
    """Deterministic next battery level: floor the net energy delta to
    whole quanta and clamp at capacity."""
    delta = energy_harvested(state, action, params, channel) - energy_spent_it(action, params)
    quanta = math.floor(delta / params.Q + _QUANTUM_SNAP)
    nxt = state.b + quanta
    if nxt < 0:
        raise ModelValidityError(
            f"battery underflow from state {state} under action {action}: "
            "action violates the feasibility constraint"
        )
    return min(nxt, params.levels)


def transition_kernel(state: SystemState, action: Action, params: SystemParams,
                      channel: ChannelModel):
    """Successor distribution: channel moves by its own chain, battery
    moves deterministically. Returns (list of SystemState, probabilities)."""
    b_next = battery_successor(state, action, params, channel)
    row = channel.transition[state.h - 1]
    nz = np.flatnonzero(row)
    states = [SystemState(int(h0) + 1, b_next) for h0 in nz]
    return states, row[nz].copy()


@dataclass
class WpcnModel:
    """Dense per-(state, action) tables over the joint state space.

    States are indexed s = (h - 1) * (L + 1) + b. Feasible actions of
    state s occupy rows sa_offsets[s]:sa_offsets[s+1] of the flat arrays;
    within a state they follow the grid enumeration order.
    """

    params: SystemParams
    channel: ChannelModel
    grid: ActionGrid
    sa_offsets: np.ndarray   # (n_states + 1,) int64
    sa_action: np.ndarray    # grid index per row
    rewards: np.ndarray      # bits per block
    costs: np.ndarray        # joules per block
    harvested: np.ndarray    # joules into the battery
    spent: np.ndarray        # joules out of the battery
    b_next: np.ndarray       # successor battery level
    succ_offsets: np.ndarray  # CSR kernel over rows
    succ_states: np.ndarray
    succ_probs: np.ndarray

    @property
    def n_states(self) -> int:
        return self.channel.n_states * (self.params.levels + 1)

    @property
    def n_rows(self) -> int:
        return int(self.sa_offsets[-1])

    def state_index(self, h: int, b: int) -> int:
        return (h - 1) * (self.params.levels + 1) + b

    def state_of(self, idx: int) -> SystemState:
        width = self.params.levels + 1
        return SystemState(idx // width + 1, idx % width)

    def row_of(self, state_idx: int, local_action: int) -> int:
        return int(self.sa_offsets[state_idx]) + int(local_action)

    def action_of_row(self, row: int) -> Action:
        return self.grid.action(int(self.sa_action[row]))

    def state_rows(self, state_idx: int) -> slice:
        return slice(int(self.sa_offsets[state_idx]), int(self.sa_offsets[state_idx + 1]))

    def to_cmdp(self):
        from .solver import FiniteCmdp

        return FiniteCmdp(
            sa_offsets=self.sa_offsets,
            rewards=self.rewards,
            costs=self.costs,
            succ_offsets=self.succ_offsets,
            succ_states=self.succ_states,
            succ_probs=self.succ_probs,
            discount=self.params.lam,
        )


def build_model(params: SystemParams, channel: ChannelModel,
                grid: ActionGrid | None = None) -> WpcnModel:
    """Precompute reward, cost, battery and kernel tables for all states.

    Rejects parameter sets under which any feasible action would have a
    negative energy cost (an unphysical efficiency/gain combination).
    """
    if grid is None:
        grid = ActionGrid.from_levels(params)
    levels = params.levels
    k_states = channel.n_states
    n_states = k_states * (levels + 1)
    a = grid.actions

    # reward depends on the action only through (channel bin, p_i)
    rate_cache: dict[tuple[int, float], float] = {}

    def rate(k: int, p_i: float) -> float:
        key = (k, p_i)
        if key not in rate_cache:
            rate_cache[key] = _rate_integral(k, p_i, params, channel)
        return rate_cache[key]

    sa_offsets = np.zeros(n_states + 1, dtype=np.int64)
    act_chunks, rew_chunks, cost_chunks = [], [], []
    harv_chunks, spent_chunks, bnext_chunks = [], [], []

    for h in range(1, k_states + 1):
        gain = channel.rep_gains[h - 1]
        bin_rates = np.array([rate(h, p_i) for p_i in a[:, 3]])
        for b in range(levels + 1):
            state = SystemState(h, b)
            idx = feasible_actions(state, params, channel, grid)
            if idx.size == 0:
                raise ModelValidityError(f"no feasible action at state {state}")
            harvested, spent = _grid_energy_columns(b, gain, grid, params)
            harvested = harvested[idx]
            spent = spent[idx]
            ap_cost = a[idx, 2] * a[idx, 0] / params.eff_AP + params.Pc_AP * a[idx, 0]
            cost = ap_cost + spent - harvested
            reward = a[idx, 1] * params.W * bin_rates[idx]
            delta = harvested - spent
            b_next = b + np.floor(delta / params.Q + _QUANTUM_SNAP).astype(np.int64)
            if np.any(b_next < 0):
                raise ModelValidityError(f"battery underflow in table build at {state}")
            b_next = np.minimum(b_next, levels)

            s = (h - 1) * (levels + 1) + b
            sa_offsets[s + 1] = idx.size
            act_chunks.append(idx.astype(np.int64))
            rew_chunks.append(reward)
            cost_chunks.append(cost)
            harv_chunks.append(harvested)
            spent_chunks.append(spent)
            bnext_chunks.append(b_next)

    np.cumsum(sa_offsets, out=sa_offsets)
    sa_action = np.concatenate(act_chunks)
    rewards = np.concatenate(rew_chunks)
    costs = np.concatenate(cost_chunks)
    harvested = np.concatenate(harv_chunks)
    spent = np.concatenate(spent_chunks)
    b_next = np.concatenate(bnext_chunks)

    worst = costs.min()
    if worst < -1e-15:
        bad = int(np.argmin(costs))
        s = int(np.searchsorted(sa_offsets, bad, side="right")) - 1
        h, b = divmod(s, levels + 1)
        raise ModelValidityError(
            f"feasible action with negative energy cost {worst:.3e} J at state "
            f"(h={h + 1}, b={b}), action {tuple(a[sa_action[bad]])}: "
            "conversion efficiency times antenna and channel gain exceeds the "
            "transmit chain losses"
        )
    np.clip(costs, 0.0, None, out=costs)

    # controlled kernel: channel row (tridiagonal) x deterministic battery
    row_nz = [np.flatnonzero(channel.transition[h0]) for h0 in range(k_states)]
    n_rows = int(sa_offsets[-1])
    counts = np.empty(n_rows, dtype=np.int64)
    state_of_row = np.repeat(np.arange(n_states), np.diff(sa_offsets))
    h_of_row = state_of_row // (levels + 1)
    for h0 in range(k_states):
        counts[h_of_row == h0] = row_nz[h0].size
    succ_offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=succ_offsets[1:])
    succ_states = np.empty(int(succ_offsets[-1]), dtype=np.int64)
    succ_probs = np.empty(int(succ_offsets[-1]))
    for r in range(n_rows):
        h0 = h_of_row[r]
        nz = row_nz[h0]
        lo, hi = succ_offsets[r], succ_offsets[r + 1]
        succ_states[lo:hi] = nz * (levels + 1) + b_next[r]
        succ_probs[lo:hi] = channel.transition[h0, nz]

    model = WpcnModel(
        params=params, channel=channel, grid=grid,
        sa_offsets=sa_offsets, sa_action=sa_action,
        rewards=rewards, costs=costs, harvested=harvested, spent=spent,
        b_next=b_next, succ_offsets=succ_offsets, succ_states=succ_states,
        succ_probs=succ_probs,
    )
    for arr in (sa_offsets, sa_action, rewards, costs, harvested, spent,
                b_next, succ_offsets, succ_states, succ_probs):
        arr.setflags(write=False)
    return model
