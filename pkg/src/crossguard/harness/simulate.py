"""Seeded closed-loop simulation and trace/metric emission.

Each step draws disturbances, driver inputs, and measurement noise from
per-(seed, vehicle, step) substreams, so adding a vehicle to a scenario
does not perturb any other vehicle's draws.  The trace is deterministic
for a fixed (config, seed, mode) apart from the wall-time column, which
records real timing; pass ``record_timing=False`` to zero it when full
byte determinism is needed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..dynamics import (
    InputSignal,
    StateInterval,
    VehicleState,
    correct_estimate,
    integrate_true,
)
from ..errors import BlockedStateError, IncompatibleMeasurement
from ..scheduling import bad_set_overlap
from ..supervisor import SupervisorConfig, initialize_session, supervisor_step
from .scenario import ScenarioConfig


@dataclass(frozen=True)
class TraceRecord:
    step: int
    vid: int
    y_true: float
    v_true: float
    y_meas: float
    v_meas: float
    y_lo: float
    y_hi: float
    v_lo: float
    v_hi: float
    input_value: float
    overridden: bool
    answer: bool
    wall_s: float


@dataclass(frozen=True)
class RunMetrics:
    collisions: int
    overrides: int
    blocked: int
    incompatible_measurements: int
    max_iter_s: float
    mean_iter_s: float
    completed: bool


def _step_rng(seed: int, vid: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, vid, k]))


@dataclass
class _Draw:
    d_y: float
    d_v: float
    w: float
    delta_y: float
    delta_v: float


def _draw(seed: int, vid: int, k: int, params, noise) -> _Draw:
    rng = _step_rng(seed, vid, k)
    d_y = rng.uniform(params.d_y_min, params.d_y_max)
    d_v = rng.uniform(params.d_v_min, params.d_v_max)
    w = rng.uniform(params.w_min, params.w_max)
    delta_y = rng.uniform(noise.delta_y_min, noise.delta_y_max)
    delta_v = rng.uniform(noise.delta_v_min, noise.delta_v_max)
    return _Draw(d_y, d_v, w, delta_y, delta_v)


def run_simulation(
    config: ScenarioConfig,
    mode: str,
    seed: Optional[int] = None,
    steps: Optional[int] = None,
    record_timing: bool = True,
    sup_config: Optional[SupervisorConfig] = None,
) -> tuple[list[TraceRecord], RunMetrics]:
    """Run one closed-loop scenario under the chosen supervisor.

    Raises InfeasibleInitialCondition when no session can be started; a
    BlockedStateError mid-run is counted and ends the run (its count must
    stay zero for the non-blocking guarantee to hold).
    """
    config = config.with_overrides(seed=seed, steps=steps)
    sup_config = sup_config or SupervisorConfig(tau=config.tau)
    dt = sup_config.dt
    vehicles = {v.vid: v for v in config.vehicles}
    params = config.params_by_id()
    desired = {
        v.vid: v.u_desire for v in config.vehicles if v.params.controlled
    }
    true_state = {v.vid: v.initial for v in config.vehicles}

    # The scenario state is the exact initial state and seeds a zero-width
    # estimate; measurement noise enters through the corrections from step
    # 1 on.  (A full noise-band estimate at step 0 makes long queues
    # infeasible before anything moves.)
    draws = {vid: _draw(config.seed, vid, 0, vehicles[vid].params, vehicles[vid].noise)
             for vid in vehicles}
    meas = {
        vid: VehicleState(
            true_state[vid].y - draws[vid].delta_y,
            true_state[vid].v - draws[vid].delta_v,
        )
        for vid in vehicles
    }
    estimate = {vid: StateInterval.point(true_state[vid]) for vid in vehicles}
    session = initialize_session(mode, params, estimate, desired, sup_config)

    trace: list[TraceRecord] = []
    wall_times: list[float] = []
    collisions = 0
    overrides = 0
    blocked = 0
    incompatible = 0
    completed = False

    for k in range(config.steps):
        if k > 0:
            draws = {
                vid: _draw(config.seed, vid, k, vehicles[vid].params, vehicles[vid].noise)
                for vid in vehicles
            }
            meas = {
                vid: VehicleState(
                    true_state[vid].y - draws[vid].delta_y,
                    true_state[vid].v - draws[vid].delta_v,
                )
                for vid in vehicles
            }
            estimate = {}
            for vid in vehicles:
                pred = session.last_prediction[vid]
                try:
                    estimate[vid] = correct_estimate(pred, meas[vid], vehicles[vid].noise)
                except IncompatibleMeasurement:
                    # bounded-noise assumption violated: keep the prediction
                    incompatible += 1
                    estimate[vid] = pred

        t0 = time.perf_counter()
        try:
            decision = supervisor_step(session, estimate, desired)
        except BlockedStateError:
            blocked += 1
            break
        wall = time.perf_counter() - t0
        wall_times.append(wall)
        if decision.overridden:
            overrides += 1

        applied = {}
        for vid, v in vehicles.items():
            if v.params.controlled:
                applied[vid] = decision.outputs[vid]
            else:
                applied[vid] = InputSignal.constant(draws[vid].w)

        for vid, v in vehicles.items():
            est = estimate[vid]
            trace.append(
                TraceRecord(
                    step=k,
                    vid=vid,
                    y_true=true_state[vid].y,
                    v_true=true_state[vid].v,
                    y_meas=meas[vid].y,
                    v_meas=meas[vid].v,
                    y_lo=est.lo.y,
                    y_hi=est.hi.y,
                    v_lo=est.lo.v,
                    v_hi=est.hi.v,
                    input_value=applied[vid].value_at(0.0),
                    overridden=decision.overridden,
                    answer=decision.answer,
                    wall_s=wall if record_timing else 0.0,
                )
            )

        # advance the ground truth and scan it for collisions at
        # integration resolution
        trajs = {
            vid: integrate_true(
                vehicles[vid].params, true_state[vid], applied[vid],
                draws[vid].d_y, draws[vid].d_v, config.tau, dt,
            )
            for vid in vehicles
        }
        vids = list(vehicles)
        alphas = [params[v].alpha for v in vids]
        betas = [params[v].beta for v in vids]
        ctrl = [params[v].controlled for v in vids]
        n_samples = len(trajs[vids[0]])
        step_collision = False
        for i in range(n_samples):
            points = [(trajs[v][i][1].y, trajs[v][i][1].y) for v in vids]
            if bad_set_overlap(points, alphas, betas, ctrl):
                step_collision = True
                break
        if step_collision:
            collisions += 1
        true_state = {vid: trajs[vid][-1][1] for vid in vehicles}

        if all(true_state[vid].y >= params[vid].beta for vid in vehicles):
            completed = True
            break

    metrics = RunMetrics(
        collisions=collisions,
        overrides=overrides,
        blocked=blocked,
        incompatible_measurements=incompatible,
        max_iter_s=(max(wall_times) if wall_times and record_timing else 0.0),
        mean_iter_s=(sum(wall_times) / len(wall_times) if wall_times and record_timing else 0.0),
        completed=completed,
    )
    return trace, metrics


TRACE_HEADER = "step,vehicle,y_true,v_true,y_meas,v_meas,y_lo,y_hi,v_lo,v_hi,input,overridden,answer,wall_s"


def format_trace(trace: list[TraceRecord]) -> str:
    lines = [TRACE_HEADER]
    for r in trace:
        lines.append(
            f"{r.step},{r.vid},{r.y_true!r},{r.v_true!r},{r.y_meas!r},{r.v_meas!r},"
            f"{r.y_lo!r},{r.y_hi!r},{r.v_lo!r},{r.v_hi!r},{r.input_value!r},"
            f"{int(r.overridden)},{int(r.answer)},{r.wall_s:.6f}"
        )
    return "\n".join(lines) + "\n"


def format_metrics(metrics: RunMetrics) -> str:
    return (
        f"collisions={metrics.collisions}\n"
        f"overrides={metrics.overrides}\n"
        f"blocked={metrics.blocked}\n"
        f"incompatible_measurements={metrics.incompatible_measurements}\n"
        f"max_iter_s={metrics.max_iter_s:.6f}\n"
        f"mean_iter_s={metrics.mean_iter_s:.6f}\n"
        f"completed={int(metrics.completed)}\n"
    )


def emit_outputs(
    trace: list[TraceRecord],
    metrics: RunMetrics,
    trace_path,
    metrics_path,
) -> None:
    """Write trace and metrics files (parents must exist)."""
    try:
        Path(trace_path).write_text(format_trace(trace), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write trace to {trace_path}: {exc}") from exc
    try:
        Path(metrics_path).write_text(format_metrics(metrics), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {metrics_path}: {exc}") from exc
