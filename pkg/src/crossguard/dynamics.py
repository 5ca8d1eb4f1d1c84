"""Longitudinal vehicle model, extremal-bound integration, and interval
state estimation.

The model is a saturated double integrator with quadratic drag:

    y' = v + d_y
    v' = u - b v^2 + d_v     clamped so v stays in [v_min, v_max]

Both position-rate and acceleration disturbances are bounded, and the
dynamics are order-preserving in the input, the disturbance, and the
initial state.  Interval bounds on the state are therefore obtained by
integrating the two extremal corners: the lower bound from the low state
with the disturbance at its minimum, the upper bound from the high state
with the disturbance at its maximum.

Integration is fixed-step classical RK4 with the speed clamped after
every (sub)step.  Piecewise-constant input signals are handled by
splitting integration steps at signal breakpoints, so results do not
depend on whether a switch falls on the step grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .errors import IncompatibleMeasurement, IntegrationDiverged

NO_CROSSING = -1.0

# Multiple of (distance / v_min) after which a requested crossing is
# declared unreachable.  With v_min > 0 every crossing happens well inside.
CROSSING_CAP_FACTOR = 10.0


class VehicleState(NamedTuple):
    y: float
    v: float


@dataclass(frozen=True)
class VehicleParams:
    """Static description of one vehicle and its slice of the intersection.

    ``u_min``/``u_max`` bound the supervisor's throttle-brake input for a
    controlled vehicle; ``w_min``/``w_max`` bound the unknown driver input
    of an uncontrolled one.  Only the pair matching ``controlled`` is used.
    ``alpha``/``beta`` locate the intersection on this vehicle's path.
    """

    v_min: float
    v_max: float
    u_min: float = 0.0
    u_max: float = 0.0
    w_min: float = 0.0
    w_max: float = 0.0
    d_y_min: float = 0.0
    d_y_max: float = 0.0
    d_v_min: float = 0.0
    d_v_max: float = 0.0
    drag_b: float = 0.0
    alpha: float = 0.0
    beta: float = 1.0
    controlled: bool = True

    def __post_init__(self) -> None:
        if not self.v_min > 0.0:
            raise ValueError("v_min must be positive (finite deadlines need it)")
        if self.v_min > self.v_max:
            raise ValueError("v_min must not exceed v_max")
        if self.controlled:
            if not self.u_min < self.u_max:
                raise ValueError("controlled vehicle needs u_min < u_max")
        else:
            if not self.w_min < self.w_max:
                raise ValueError("uncontrolled vehicle needs w_min < w_max")
        if not self.alpha < self.beta:
            raise ValueError("alpha must be below beta")
        if self.d_y_min > 0.0 or self.d_y_max < 0.0 or self.d_v_min > 0.0 or self.d_v_max < 0.0:
            raise ValueError("disturbance intervals must contain 0")

    @property
    def input_bounds(self) -> tuple[float, float]:
        """Bounds of the drive input that actually steers this vehicle."""
        if self.controlled:
            return self.u_min, self.u_max
        return self.w_min, self.w_max

    def disturbance(self, dist: str) -> tuple[float, float]:
        """Extremal (d_y, d_v) pair for ``dist`` in {"min", "max"}."""
        if dist == "min":
            return self.d_y_min, self.d_v_min
        if dist == "max":
            return self.d_y_max, self.d_v_max
        raise ValueError(f"dist must be 'min' or 'max', got {dist!r}")


@dataclass(frozen=True)
class StateInterval:
    """Componentwise state bounds that bracket the true state."""

    lo: VehicleState
    hi: VehicleState

    def __post_init__(self) -> None:
        if self.lo.y > self.hi.y or self.lo.v > self.hi.v:
            raise ValueError(f"interval bounds out of order: {self.lo} > {self.hi}")

    @staticmethod
    def point(state: VehicleState) -> "StateInterval":
        return StateInterval(state, state)

    def contains(self, state: VehicleState, slack: float = 0.0) -> bool:
        return (
            self.lo.y - slack <= state.y <= self.hi.y + slack
            and self.lo.v - slack <= state.v <= self.hi.v + slack
        )


@dataclass(frozen=True)
class NoiseBounds:
    delta_y_min: float
    delta_y_max: float
    delta_v_min: float
    delta_v_max: float

    def __post_init__(self) -> None:
        if self.delta_y_min > self.delta_y_max or self.delta_v_min > self.delta_v_max:
            raise ValueError("noise bounds out of order")


@dataclass(frozen=True)
class InputSignal:
    """Piecewise-constant input on [0, inf).

    ``times[i]`` starts the piece holding ``values[i]``; the final piece
    extends forever, so the signal is defined on any finite horizon.
    """

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("times and values must be non-empty and aligned")
        if self.times[0] != 0.0:
            raise ValueError("first piece must start at 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @staticmethod
    def constant(u: float) -> "InputSignal":
        return InputSignal((0.0,), (float(u),))

    @staticmethod
    def bang_bang(u_low: float, switch_time: float, u_high: float) -> "InputSignal":
        """Hold ``u_low`` until ``switch_time``, then ``u_high`` forever."""
        if switch_time <= 0.0:
            return InputSignal((0.0,), (float(u_high),))
        return InputSignal((0.0, float(switch_time)), (float(u_low), float(u_high)))

    def value_at(self, t: float) -> float:
        i = len(self.times) - 1
        while i > 0 and self.times[i] > t:
            i -= 1
        return self.values[i]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times, dtype=np.float64), np.asarray(self.values, dtype=np.float64)

# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------


@njit(cache=True)
def _accel(v, u, d_v, v_min, v_max, b):
    a = u - b * v * v + d_v
    if v <= v_min:
        return a if a > 0.0 else 0.0
    if v >= v_max:
        return a if a < 0.0 else 0.0
    return a


@njit(cache=True)
def _rk4_substep(y, v, u, d_y, d_v, v_min, v_max, b, h):
    k1v = _accel(v, u, d_v, v_min, v_max, b)
    v2 = v + 0.5 * h * k1v
    k2v = _accel(v2, u, d_v, v_min, v_max, b)
    v3 = v + 0.5 * h * k2v
    k3v = _accel(v3, u, d_v, v_min, v_max, b)
    v4 = v + h * k3v
    k4v = _accel(v4, u, d_v, v_min, v_max, b)
    y_new = y + h * (d_y + (v + 2.0 * v2 + 2.0 * v3 + v4) / 6.0)
    v_new = v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
    if v_new < v_min:
        v_new = v_min
    elif v_new > v_max:
        v_new = v_max
    return y_new, v_new


@njit(cache=True)
def _signal_value(starts, values, t):
    i = starts.shape[0] - 1
    while i > 0 and starts[i] > t + 1e-12:
        i -= 1
    return values[i]


@njit(cache=True)
def _advance_grid_step(y, v, t0, h_total, starts, values, d_y, d_v, v_min, v_max, b):
    """One grid step of length h_total, split at signal breakpoints."""
    t_loc = t0
    remaining = h_total
    while remaining > 1e-15:
        u = _signal_value(starts, values, t_loc)
        h = remaining
        for i in range(starts.shape[0]):
            gap = starts[i] - t_loc
            if gap > 1e-12 and gap < h:
                h = gap
        y, v = _rk4_substep(y, v, u, d_y, d_v, v_min, v_max, b, h)
        t_loc += h
        remaining -= h
    return y, v


@njit(cache=True)
def _integrate_final(y, v, starts, values, d_y, d_v, v_min, v_max, b, horizon, step):
    n_whole = int(horizon / step)
    for k in range(n_whole):
        y, v = _advance_grid_step(y, v, k * step, step, starts, values, d_y, d_v, v_min, v_max, b)
    t = n_whole * step
    if horizon - t > 1e-15:
        y, v = _advance_grid_step(y, v, t, horizon - t, starts, values, d_y, d_v, v_min, v_max, b)
    return y, v


@njit(cache=True)
def _integrate_traj(y, v, starts, values, d_y, d_v, v_min, v_max, b, horizon, step,
                    out_t, out_y, out_v):
    n_whole = int(horizon / step)
    out_t[0] = 0.0
    out_y[0] = y
    out_v[0] = v
    n = 1
    for k in range(n_whole):
        y, v = _advance_grid_step(y, v, k * step, step, starts, values, d_y, d_v, v_min, v_max, b)
        out_t[n] = (k + 1) * step
        out_y[n] = y
        out_v[n] = v
        n += 1
    t = n_whole * step
    if horizon - t > 1e-15:
        y, v = _advance_grid_step(y, v, t, horizon - t, starts, values, d_y, d_v, v_min, v_max, b)
        out_t[n] = horizon
        out_y[n] = y
        out_v[n] = v
        n += 1
    return n


@njit(cache=True)
def _crossing(y, v, starts, values, d_y, d_v, v_min, v_max, b, target, step, t_cap):
    """First time y reaches target, interpolated inside the bracketing
    (sub)step; NO_CROSSING if t_cap is exhausted first."""
    if y >= target:
        return 0.0
    t = 0.0
    k = 0
    while t < t_cap:
        t_next = (k + 1) * step
        # split the grid step at breakpoints, checking after each substep
        t_loc = t
        y_loc = y
        v_loc = v
        while t_loc < t_next - 1e-15:
            u = _signal_value(starts, values, t_loc)
            h = t_next - t_loc
            for i in range(starts.shape[0]):
                gap = starts[i] - t_loc
                if gap > 1e-12 and gap < h:
                    h = gap
            y_prev = y_loc
            y_loc, v_loc = _rk4_substep(y_loc, v_loc, u, d_y, d_v, v_min, v_max, b, h)
            if y_loc >= target:
                if y_loc == y_prev:
                    return t_loc
                return t_loc + h * (target - y_prev) / (y_loc - y_prev)
            t_loc += h
        y = y_loc
        v = v_loc
        k += 1
        t = k * step
    return NO_CROSSING


@njit(cache=True)
def _const_prefix(y, v, u, d_y, d_v, v_min, v_max, b, target, step, t_cap, out_y, out_v):
    """Integrate a constant input, storing the state at each grid time while
    y < target.  Returns (number of stored samples, crossing time)."""
    out_y[0] = y
    out_v[0] = v
    n = 1
    k = 0
    t = 0.0
    if y >= target:
        return n, 0.0
    while t < t_cap and n < out_y.shape[0]:
        y_prev = y
        y, v = _rk4_substep(y, v, u, d_y, d_v, v_min, v_max, b, step)
        k += 1
        t = k * step
        if y >= target:
            if y == y_prev:
                return n, t - step
            return n, t - step + step * (target - y_prev) / (y - y_prev)
        out_y[n] = y
        out_v[n] = v
        n += 1
    return n, NO_CROSSING


@njit(cache=True)
def _switch_tail_crossing(pre_y, pre_v, n_pre, s, u_low, u_high,
                          d_y, d_v, v_min, v_max, b, step, target, t_cap):
    """Crossing time of ``target`` under (u_low until s, then u_high),
    resuming from a stored u_low prefix.

    Reproduces grid-aligned integration with a breakpoint at s exactly:
    partial step [t_i, s] under u_low, partial [s, t_{i+1}] under u_high,
    then whole steps.
    """
    i = int(s / step)
    if i > n_pre - 1:
        i = n_pre - 1
    t_i = i * step
    y = pre_y[i]
    v = pre_v[i]
    if y >= target:
        return t_i
    partial = s - t_i
    if partial > 1e-15:
        y_prev = y
        y, v = _rk4_substep(y, v, u_low, d_y, d_v, v_min, v_max, b, partial)
        if y >= target:
            if y == y_prev:
                return t_i
            return t_i + partial * (target - y_prev) / (y - y_prev)
    # finish the grid step under u_high, then march whole steps
    t_loc = s
    k = i + 1
    t_next = k * step
    while t_loc < t_cap:
        h = t_next - t_loc
        if h > 1e-15:
            y_prev = y
            y, v = _rk4_substep(y, v, u_high, d_y, d_v, v_min, v_max, b, h)
            if y >= target:
                if y == y_prev:
                    return t_loc
                return t_loc + h * (target - y_prev) / (y - y_prev)
        t_loc = t_next
        k += 1
        t_next = k * step
    return NO_CROSSING


@njit(cache=True)
def _worst_crossing_gap(pre_hi_y, pre_hi_v, n_hi, pre_lo_y, pre_lo_v, n_lo,
                        switch_max, samples, u_low, u_high,
                        d_y_hi, d_v_hi, d_y_lo, d_v_lo,
                        v_min, v_max, b, step, alpha, beta, cap_hi, cap_lo):
    """Largest (exit - entry) over a uniform switch grid: entry from the
    stored upper-corner brake prefix to alpha, exit from the lower-corner
    prefix to beta, both finished under the high input."""
    worst = 0.0
    for i in range(samples):
        s = switch_max * i / (samples - 1)
        entry = _switch_tail_crossing(
            pre_hi_y, pre_hi_v, n_hi, s, u_low, u_high,
            d_y_hi, d_v_hi, v_min, v_max, b, step, alpha, cap_hi,
        )
        exit_t = _switch_tail_crossing(
            pre_lo_y, pre_lo_v, n_lo, s, u_low, u_high,
            d_y_lo, d_v_lo, v_min, v_max, b, step, beta, cap_lo,
        )
        if entry < 0.0 or exit_t < 0.0:
            return NO_CROSSING
        gap = exit_t - entry
        if gap > worst:
            worst = gap
    return worst


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def _drive_signal(params: VehicleParams, sig: Optional[InputSignal], dist: str) -> InputSignal:
    """Signal actually applied: controlled vehicles use ``sig``; uncontrolled
    ones use the extremal driver input matching the requested bound."""
    if params.controlled:
        if sig is None:
            raise ValueError("controlled vehicle needs an input signal")
        return sig
    return InputSignal.constant(params.w_min if dist == "min" else params.w_max)


def _check_finite(y: float, v: float) -> None:
    if not (math.isfinite(y) and math.isfinite(v)):
        raise IntegrationDiverged(f"state diverged to ({y}, {v})")


def integrate_extremal(
    params: VehicleParams,
    s0: VehicleState,
    sig: Optional[InputSignal],
    dist: str,
    horizon: float,
    step: float,
) -> list[tuple[float, VehicleState]]:
    """Trajectory under ``sig`` with the disturbance held at its ``dist``
    extreme, sampled at multiples of ``step`` (plus the horizon endpoint)."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    d_y, d_v = params.disturbance(dist)
    sig = _drive_signal(params, sig, dist)
    starts, values = sig.arrays()
    n_max = int(horizon / step) + 3
    out_t = np.empty(n_max)
    out_y = np.empty(n_max)
    out_v = np.empty(n_max)
    n = _integrate_traj(
        s0.y, s0.v, starts, values, d_y, d_v,
        params.v_min, params.v_max, params.drag_b, horizon, step,
        out_t, out_y, out_v,
    )
    _check_finite(out_y[n - 1], out_v[n - 1])
    return [(float(out_t[i]), VehicleState(float(out_y[i]), float(out_v[i]))) for i in range(n)]


def integrate_final(
    params: VehicleParams,
    s0: VehicleState,
    sig: Optional[InputSignal],
    dist: str,
    horizon: float,
    step: float,
) -> VehicleState:
    """Endpoint of :func:`integrate_extremal` without storing the path."""
    d_y, d_v = params.disturbance(dist)
    sig = _drive_signal(params, sig, dist)
    starts, values = sig.arrays()
    y, v = _integrate_final(
        s0.y, s0.v, starts, values, d_y, d_v,
        params.v_min, params.v_max, params.drag_b, horizon, step,
    )
    _check_finite(y, v)
    return VehicleState(float(y), float(v))


def integrate_true(
    params: VehicleParams,
    s0: VehicleState,
    sig: InputSignal,
    d_y: float,
    d_v: float,
    horizon: float,
    step: float,
) -> list[tuple[float, VehicleState]]:
    """Trajectory under explicit disturbance values (simulation ground truth)."""
    starts, values = sig.arrays()
    n_max = int(horizon / step) + 3
    out_t = np.empty(n_max)
    out_y = np.empty(n_max)
    out_v = np.empty(n_max)
    n = _integrate_traj(
        s0.y, s0.v, starts, values, d_y, d_v,
        params.v_min, params.v_max, params.drag_b, horizon, step,
        out_t, out_y, out_v,
    )
    _check_finite(out_y[n - 1], out_v[n - 1])
    return [(float(out_t[i]), VehicleState(float(out_y[i]), float(out_v[i]))) for i in range(n)]


def propagate_interval(
    params: VehicleParams,
    est: StateInterval,
    sig: Optional[InputSignal],
    horizon: float,
    step: float,
) -> StateInterval:
    """Extremal-corner propagation: brackets every trajectory starting in
    ``est`` under any admissible disturbance (and, for uncontrolled
    vehicles, any driver input)."""
    if horizon <= 0.0:
        return est
    lo = integrate_final(params, est.lo, sig, "min", horizon, step)
    hi = integrate_final(params, est.hi, sig, "max", horizon, step)
    return StateInterval(lo, hi)


def predict_step(
    params: VehicleParams,
    est: StateInterval,
    sig_over_tau: Optional[InputSignal],
    tau: float,
    step: float,
) -> StateInterval:
    """Set of possible states one supervisor step ahead."""
    return propagate_interval(params, est, sig_over_tau, tau, step)


def correct_estimate(
    pred: StateInterval,
    meas: VehicleState,
    noise: NoiseBounds,
) -> StateInterval:
    """Intersect the prediction with the measurement band, componentwise."""
    lo = VehicleState(
        max(pred.lo.y, meas.y + noise.delta_y_min),
        max(pred.lo.v, meas.v + noise.delta_v_min),
    )
    hi = VehicleState(
        min(pred.hi.y, meas.y + noise.delta_y_max),
        min(pred.hi.v, meas.v + noise.delta_v_max),
    )
    if lo.y > hi.y or lo.v > hi.v:
        raise IncompatibleMeasurement(
            f"prediction {pred} and measurement {meas} do not intersect"
        )
    return StateInterval(lo, hi)


def crossing_cap(params: VehicleParams, y0: float, target_y: float) -> float:
    """Horizon after which a crossing is declared unreachable."""
    return CROSSING_CAP_FACTOR * max(target_y - y0, 1.0) / params.v_min


def crossing_time(
    params: VehicleParams,
    s0: VehicleState,
    sig: Optional[InputSignal],
    dist: str,
    target_y: float,
    step: float,
    horizon_cap: Optional[float] = None,
) -> Optional[float]:
    """First time the position reaches ``target_y``, located by integration
    and linear interpolation within the bracketing step.  None if the
    crossing does not happen within the horizon cap."""
    if s0.y >= target_y:
        return 0.0
    d_y, d_v = params.disturbance(dist)
    sig = _drive_signal(params, sig, dist)
    starts, values = sig.arrays()
    cap = crossing_cap(params, s0.y, target_y) if horizon_cap is None else horizon_cap
    t = _crossing(
        s0.y, s0.v, starts, values, d_y, d_v,
        params.v_min, params.v_max, params.drag_b, target_y, step, cap,
    )
    return None if t == NO_CROSSING else float(t)


def initial_estimate(
    params: VehicleParams, meas: VehicleState, noise: NoiseBounds
) -> StateInterval:
    """Estimate from a measurement alone (session start, no prediction yet).

    Speed bounds are clipped to [v_min, v_max]: the true speed always lies
    there, so the intersection keeps containment while staying integrable.
    """
    clip = lambda v: min(max(v, params.v_min), params.v_max)
    return StateInterval(
        VehicleState(meas.y + noise.delta_y_min, clip(meas.v + noise.delta_v_min)),
        VehicleState(meas.y + noise.delta_y_max, clip(meas.v + noise.delta_v_max)),
    )
