"""Shared fixtures and randomized-instance generators."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crossguard import StateInterval, VehicleParams, VehicleState

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"

# parameters used throughout the simulation scenarios
SIM = dict(
    v_min=1.39,
    v_max=13.9,
    d_y_min=-0.05,
    d_y_max=0.05,
    d_v_min=-0.05,
    d_v_max=0.05,
    drag_b=0.001,
    alpha=0.0,
    beta=5.0,
)


def sim_controlled(**over) -> VehicleParams:
    kw = dict(SIM, u_min=-2.5, u_max=2.5, controlled=True)
    kw.update(over)
    return VehicleParams(**kw)


def sim_uncontrolled(**over) -> VehicleParams:
    kw = dict(SIM, w_min=-0.5, w_max=0.5, controlled=False)
    kw.update(over)
    return VehicleParams(**kw)


def interval(params: VehicleParams, y: float, v: float, wy: float = 0.0, wv: float = 0.0) -> StateInterval:
    v_lo = min(max(v - wv, params.v_min), params.v_max)
    v_hi = min(max(v + wv, params.v_min), params.v_max)
    return StateInterval(VehicleState(y - wy, v_lo), VehicleState(y + wy, v_hi))


def random_params(rng: np.random.Generator, controlled: bool) -> VehicleParams:
    v_min = rng.uniform(1.0, 2.0)
    v_max = rng.uniform(9.0, 14.0)
    kw = dict(
        v_min=v_min,
        v_max=v_max,
        d_y_min=-rng.uniform(0.0, 0.05),
        d_y_max=rng.uniform(0.0, 0.05),
        d_v_min=-rng.uniform(0.0, 0.05),
        d_v_max=rng.uniform(0.0, 0.05),
        drag_b=float(rng.choice([0.0, 0.001])),
        alpha=0.0,
        beta=rng.uniform(4.0, 6.0),
        controlled=controlled,
    )
    if controlled:
        kw.update(u_min=-rng.uniform(2.0, 3.0), u_max=rng.uniform(2.0, 3.0))
    else:
        kw.update(w_min=-rng.uniform(0.3, 0.7), w_max=rng.uniform(0.3, 0.7))
    return VehicleParams(**kw)


def random_interval(
    rng: np.random.Generator,
    params: VehicleParams,
    y_range: tuple[float, float] = (-60.0, -5.0),
) -> StateInterval:
    y = rng.uniform(*y_range)
    v = rng.uniform(params.v_min, params.v_max)
    wy = rng.uniform(0.0, 3.0)
    wv = rng.uniform(0.0, 0.3)
    return interval(params, y, v, wy, wv)


def random_instance_inputs(
    rng: np.random.Generator,
    n_controlled: int,
    n_uncontrolled: int,
    y_range: tuple[float, float] = (-60.0, -5.0),
    tight: bool = False,
):
    """(params_by_id, estimates) for a randomized verification instance."""
    params = {}
    estimates = {}
    vid = 1
    if tight:
        # cluster arrivals so the schedules compete for the intersection
        base = rng.uniform(-45.0, -15.0)
        y_range = (base - 6.0, base + 6.0)
    for _ in range(n_controlled):
        p = random_params(rng, controlled=True)
        params[vid] = p
        estimates[vid] = random_interval(rng, p, y_range)
        vid += 1
    for _ in range(n_uncontrolled):
        p = random_params(rng, controlled=False)
        params[vid] = p
        estimates[vid] = random_interval(rng, p, y_range)
        vid += 1
    return params, estimates


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def min_time(fn, reps: int = 3) -> float:
    """Best-of-``reps`` wall time with the garbage collector paused:
    robust against collection pauses and scheduler preemption when two
    measured durations are compared."""
    import gc
    import time

    best = float("inf")
    gc.collect()
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return best
