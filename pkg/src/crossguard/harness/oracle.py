"""Brute-force safe-input search over small instances.

Independent check of the scheduling-based verifiers: enumerate bang-bang
input signals per controlled vehicle on a switch-time grid, compute each
candidate's guaranteed occupancy window of the intersection directly by
extremal integration, and answer yes iff some combination keeps every
pair of windows (with at least one controlled vehicle) disjoint.  The
``inflated`` variant replaces each controlled exit position with
alpha + theta * v_max, the comparison object for the approximation bound
of the polynomial verifier.
"""
from __future__ import annotations

from typing import Mapping, Optional

from ..dynamics import InputSignal, StateInterval, VehicleParams, crossing_time
from ..errors import OracleSizeError
from ..scheduling import idle_time

MAX_CONTROLLED = 4
DISJOINT_SLACK = 1e-9


def _occupancy_windows(
    params: VehicleParams,
    est: StateInterval,
    step: float,
    exit_pos: float,
    switch_points: int,
) -> Optional[list[tuple[float, float]]]:
    """Candidate occupancy windows (entry, exit) for one controlled vehicle;
    None when the vehicle is already past the exit position."""
    if est.lo.y >= exit_pos:
        return None
    if est.hi.y >= params.alpha:
        # already entering: full throttle dominates every other choice
        exit_t = crossing_time(
            params, est.lo, InputSignal.constant(params.u_max), "min", exit_pos, step
        )
        return [(0.0, exit_t)]
    s_hi = crossing_time(
        params, est.hi, InputSignal.constant(params.u_min), "max", params.alpha, step
    )
    windows = []
    for i in range(switch_points):
        s = s_hi * i / (switch_points - 1)
        sig = InputSignal.bang_bang(params.u_min, s, params.u_max)
        entry = crossing_time(params, est.hi, sig, "max", params.alpha, step)
        exit_t = crossing_time(params, est.lo, sig, "min", exit_pos, step)
        windows.append((entry, exit_t))
    return windows


def _disjoint(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return min(a[1], b[1]) - max(a[0], b[0]) <= DISJOINT_SLACK


def brute_force_safe_input_oracle(
    params_by_id: Mapping[int, VehicleParams],
    estimates: Mapping[int, StateInterval],
    step: float,
    switch_points: int = 32,
    bad_set: str = "nominal",
    theta: Optional[float] = None,
) -> bool:
    """Yes iff some combination of candidate inputs keeps all pairwise
    occupancy windows disjoint (controlled-controlled and
    controlled-uncontrolled pairs; uncontrolled vehicles never conflict
    with each other by assumption)."""
    if bad_set not in ("nominal", "inflated"):
        raise ValueError(f"bad_set must be 'nominal' or 'inflated', got {bad_set!r}")
    if bad_set == "inflated" and theta is None:
        raise ValueError("inflated bad set needs the uniform process-time bound")
    n_c = sum(1 for p in params_by_id.values() if p.controlled)
    if n_c > MAX_CONTROLLED:
        raise OracleSizeError(f"{n_c} controlled vehicles exceed the oracle guard")

    fixed: list[tuple[float, float]] = []          # windows that conflict with everything
    uncontrolled: list[tuple[float, float]] = []   # windows that conflict with controlled only
    choices: list[list[tuple[float, float]]] = []  # per searched vehicle
    for vid, p in params_by_id.items():
        est = estimates[vid]
        if p.controlled:
            exit_pos = p.beta if bad_set == "nominal" else p.alpha + theta * p.v_max
            w = _occupancy_windows(p, est, step, exit_pos, switch_points)
            if w is None:
                continue
            if len(w) == 1:
                fixed.append(w[0])
            else:
                choices.append(w)
        else:
            start, end = idle_time(p, est, step)
            if end > 0.0:
                uncontrolled.append((start, end))

    for i in range(len(fixed)):
        for j in range(i + 1, len(fixed)):
            if not _disjoint(fixed[i], fixed[j]):
                return False
        for w in uncontrolled:
            if not _disjoint(fixed[i], w):
                return False

    blockers = fixed + uncontrolled

    def search(depth: int, chosen: list[tuple[float, float]]) -> bool:
        if depth == len(choices):
            return True
        for cand in choices[depth]:
            if all(_disjoint(cand, w) for w in blockers) and all(
                _disjoint(cand, w) for w in chosen
            ):
                chosen.append(cand)
                if search(depth + 1, chosen):
                    return True
                chosen.pop()
        return False

    return search(0, [])
