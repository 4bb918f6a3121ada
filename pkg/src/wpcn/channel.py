"""Finite-state Markov channel built from Rician fading statistics.

The continuous fading power theta is partitioned into K equiprobable bins.
Each bin becomes one channel state carrying a representative power gain
(the conditional mean over the bin, scaled by path loss), and block-to-block
dynamics are tridiagonal with transition probabilities calibrated by the
level crossing rate at the shared bin boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ModelValidityError, NumericalError

__all__ = [
    "RicianFading",
    "ChannelModel",
    "bessel_i0e",
    "bessel_i0",
    "rician_pdf",
    "fading_cdf",
    "partition_boundaries",
    "upper_support",
    "representative_gain",
    "level_crossing_rate",
    "transition_matrix",
    "build_channel_model",
]

# Switch between the ascending series and the large-argument asymptotic
# expansion of I0. The asymptotic truncation error behaves like exp(-2x),
# which is below 1e-15 for x >= 18.
_I0_SWITCH = 18.0
_SERIES_MAX_TERMS = 500


def _i0e_scalar(x: float) -> float:
    x = abs(x)
    if x <= _I0_SWITCH:
        # I0(x) = sum_k (x^2/4)^k / (k!)^2, all terms positive
        t = 0.25 * x * x
        term = 1.0
        total = 1.0
        for k in range(1, _SERIES_MAX_TERMS):
            term *= t / (k * k)
            total += term
            if term <= total * 1e-18:
                break
        return math.exp(-x) * total
    # I0(x) ~ e^x / sqrt(2 pi x) * [1 + 1/(8x) + 9/(2!(8x)^2) + ...]
    total = 1.0
    term = 1.0
    for k in range(1, 40):
        new = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if new >= term:  # past the optimal truncation point
            break
        term = new
        total += term
        if term <= total * 1e-18:
            break
    return total / math.sqrt(2.0 * math.pi * x)


def bessel_i0e(x):
    """Exponentially scaled modified Bessel function exp(-|x|) * I0(x)."""
    if np.isscalar(x):
        return _i0e_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _i0e_scalar(flat_in[i])
    return out


def bessel_i0(x):
    """Modified Bessel function I0(x); overflows for |x| above ~709."""
    return bessel_i0e(x) * np.exp(np.abs(x))


@dataclass(frozen=True)
class RicianFading:
    """Rician fading power distribution.

    varrho2 is the scatter parameter (2*varrho2 is the total multipath
    power), varsigma2 the line-of-sight power, and doppler_hz the maximum
    Doppler shift driving the level crossing rate.
    """

    varrho2: float
    varsigma2: float
    doppler_hz: float

    def __post_init__(self):
        if self.varrho2 <= 0:
            raise ModelValidityError(f"varrho2 must be positive, got {self.varrho2}")
        if self.varsigma2 < 0:
            raise ModelValidityError(f"varsigma2 must be nonnegative, got {self.varsigma2}")
        if self.doppler_hz <= 0:
            raise ModelValidityError(f"doppler_hz must be positive, got {self.doppler_hz}")

    @property
    def mean_power(self) -> float:
        return 2.0 * self.varrho2 + self.varsigma2

    @property
    def k_factor(self) -> float:
        return self.varsigma2 / (2.0 * self.varrho2)


def rician_pdf(theta, fading: RicianFading):
    """Density of the fading power: exp(-(t+s2)/(2r2)) I0(sqrt(t) s / r2) / (2r2).

    Evaluated through the scaled Bessel function so the result never
    overflows: the combined exponent is -(sqrt(t) - s)^2 / (2 r2) <= 0.
    """
    scalar = np.isscalar(theta)
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0):
        raise ValueError("fading power must be nonnegative")
    r2 = fading.varrho2
    s = math.sqrt(fading.varsigma2)
    root = np.sqrt(t)
    dens = np.exp(-((root - s) ** 2) / (2.0 * r2)) * bessel_i0e(root * s / r2) / (2.0 * r2)
    return float(dens) if scalar else dens


def fading_cdf(theta: float, fading: RicianFading, abs_tol: float = 1e-10) -> float:
    """P(fading power <= theta) by adaptive quadrature of the density."""
    if theta < 0:
        raise ValueError("fading power must be nonnegative")
    if theta == 0.0:
        return 0.0
    val, err = quad(rician_pdf, 0.0, theta, args=(fading,), epsabs=abs_tol / 100.0,
                    epsrel=1e-12, limit=400)
    if err > abs_tol:
        raise NumericalError(
            f"CDF quadrature error {err:.3e} above tolerance {abs_tol:.1e} at theta={theta!r}"
        )
    return val


def _invert_cdf(fading: RicianFading, target: float, prob_tol: float,
                lo: float = 0.0, cdf_abs_tol: float = 1e-12) -> float:
    """Bisection on the CDF until |CDF(x) - target| <= prob_tol."""
    hi = max(fading.mean_power, 1.0, 2.0 * lo)
    for _ in range(200):
        if fading_cdf(hi, fading, cdf_abs_tol) >= target:
            break
        hi *= 2.0
    else:
        raise NumericalError(f"no upper bracket found for quantile {target}")
    mid = 0.5 * (lo + hi)
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        c = fading_cdf(mid, fading, cdf_abs_tol)
        if abs(c - target) <= prob_tol:
            return mid
        if c < target:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"CDF inversion stalled for target {target}: bracket [{lo}, {hi}], "
        f"CDF(mid)={fading_cdf(mid, fading, cdf_abs_tol)}"
    )


def partition_boundaries(n_states: int, fading: RicianFading,
                         prob_tol: float = 1e-10) -> np.ndarray:
    """Equiprobable bin boundaries [0, T2, ..., TK, inf] with CDF(Tk) = (k-1)/K."""
    if n_states < 1:
        raise ValueError("need at least one channel state")
    bounds = np.empty(n_states + 1)
    bounds[0] = 0.0
    bounds[-1] = np.inf
    prev = 0.0
    for k in range(1, n_states):
        prev = _invert_cdf(fading, k / n_states, prob_tol, lo=prev)
        bounds[k] = prev
    return bounds


def upper_support(fading: RicianFading, tail_mass: float = 1e-12) -> float:
    """Quantile containing all but tail_mass of the distribution; used to
    truncate integrals over the unbounded top bin."""
    return _invert_cdf(fading, 1.0 - tail_mass, prob_tol=tail_mass / 2.0,
                       cdf_abs_tol=1e-13)


def _bin_edges(k: int, boundaries: np.ndarray, fading: RicianFading):
    n_states = len(boundaries) - 1
    if not 1 <= k <= n_states:
        raise ValueError(f"channel state {k} outside 1..{n_states}")
    lo = boundaries[k - 1]
    hi = boundaries[k]
    if not np.isfinite(hi):
        hi = upper_support(fading)
    return lo, hi


def bin_conditional_mean(k: int, boundaries: np.ndarray, fading: RicianFading) -> float:
    """Mean fading power conditioned on bin k (pi_k = 1/K by construction)."""
    n_states = len(boundaries) - 1
    lo, hi = _bin_edges(k, boundaries, fading)
    val, err = quad(lambda t: t * rician_pdf(t, fading), lo, hi,
                    epsabs=1e-13, epsrel=1e-11, limit=400)
    if err > 1e-9:
        raise NumericalError(
            f"bin-mean quadrature error {err:.3e} on [{lo}, {hi}] (state {k})"
        )
    return val * n_states


def representative_gain(k: int, distance: float, alpha: float,
                        fading: RicianFading, boundaries: np.ndarray) -> float:
    """Representative channel power gain of state k with path loss folded in."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return distance ** (-alpha) * bin_conditional_mean(k, boundaries, fading)


def level_crossing_rate(threshold: float, fading: RicianFading) -> float:
    """Expected crossings per second of the fading power at the threshold.

    sqrt(2 pi (1+kappa) T / mean) * fD * exp(-(kappa + (1+kappa)T/mean))
      * I0(2 sqrt(kappa (1+kappa) T / mean))
    computed in scaled form: the net exponent is -(sqrt(kappa)-sqrt(x))^2 <= 0
    with x = (1+kappa) T / mean.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    kappa = fading.k_factor
    x = (1.0 + kappa) * threshold / fading.mean_power
    bessel_arg = 2.0 * math.sqrt(kappa * x)
    exponent = -(math.sqrt(kappa) - math.sqrt(x)) ** 2
    return math.sqrt(2.0 * math.pi * x) * fading.doppler_hz * math.exp(exponent) \
        * _i0e_scalar(bessel_arg)


def transition_matrix(boundaries: np.ndarray, fading: RicianFading,
                      block_duration: float) -> np.ndarray:
    """Tridiagonal one-step channel transition matrix.

    Crossing the shared boundary between bins k and k+1 drives both the
    upward rate out of k and the downward rate out of k+1, so the uniform
    distribution is stationary by construction. Rows are completed by the
    self-transition residual; a negative residual means the block duration
    is too long for the requested Doppler/state-count combination.
    """
    if block_duration <= 0:
        raise ValueError("block duration must be positive")
    n_states = len(boundaries) - 1
    p = np.zeros((n_states, n_states))
    for k in range(n_states):
        up = 0.0
        down = 0.0
        if k + 1 < n_states:
            up = level_crossing_rate(boundaries[k + 1], fading) * block_duration * n_states
        if k > 0:
            down = level_crossing_rate(boundaries[k], fading) * block_duration * n_states
        stay = 1.0 - up - down
        if stay < 0.0:
            raise ModelValidityError(
                f"self-transition probability {stay:.4f} < 0 in channel state "
                f"{k + 1}: block duration {block_duration} s too long for "
                f"fD={fading.doppler_hz} Hz with {n_states} states"
            )
        if k + 1 < n_states:
            p[k, k + 1] = up
        if k > 0:
            p[k, k - 1] = down
        p[k, k] = stay
    return p


@dataclass(frozen=True)
class ChannelModel:
    """Immutable quantized channel: boundaries, per-state gains, dynamics."""

    n_states: int
    boundaries: np.ndarray        # length K+1, boundaries[0]=0, boundaries[-1]=inf
    bin_means: np.ndarray         # conditional mean fading power per state
    rep_gains: np.ndarray         # bin_means * distance^-alpha
    transition: np.ndarray        # K x K row-stochastic, tridiagonal
    steady: np.ndarray            # uniform 1/K by construction
    theta_max: float              # truncation point for top-bin integrals
    fading: RicianFading
    block_duration: float
    distance: float
    alpha: float

    def bin_bounds(self, k: int):
        """Integration bounds (lo, hi) of state k, top bin truncated."""
        lo = self.boundaries[k - 1]
        hi = self.boundaries[k] if k < self.n_states else self.theta_max
        return lo, hi


def build_channel_model(n_states: int, fading: RicianFading, block_duration: float,
                        distance: float, alpha: float,
                        prob_tol: float = 1e-10) -> ChannelModel:
    """Construct the quantized channel for the given fading and geometry."""
    boundaries = partition_boundaries(n_states, fading, prob_tol)
    theta_max = upper_support(fading)
    bin_means = np.array(
        [bin_conditional_mean(k, boundaries, fading) for k in range(1, n_states + 1)]
    )
    if np.any(np.diff(bin_means) <= 0):
        raise ModelValidityError("bin means are not strictly increasing")
    rep_gains = distance ** (-alpha) * bin_means
    trans = transition_matrix(boundaries, fading, block_duration)
    steady = np.full(n_states, 1.0 / n_states)
    for arr in (boundaries, bin_means, rep_gains, trans, steady):
        arr.setflags(write=False)
    return ChannelModel(
        n_states=n_states,
        boundaries=boundaries,
        bin_means=bin_means,
        rep_gains=rep_gains,
        transition=trans,
        steady=steady,
        theta_max=theta_max,
        fading=fading,
        block_duration=block_duration,
        distance=distance,
        alpha=alpha,
    )
