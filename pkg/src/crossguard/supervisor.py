"""Closed-loop supervisors.

Each step the supervisor predicts the state estimate one step ahead under
the drivers' desired inputs and verifies that a collision-free future
exists from that prediction (exactly, or through the polynomial
relaxation).  If it does, and the coming step itself stays clear of the
collision set, the desired inputs pass through; otherwise the vehicles
are overridden with the safe input signal stored at the previous step.
Either way a fresh safe signal for the next step is generated from a
feasible schedule of the chosen prediction and stored, which is what
makes the loop non-blocking: the efficient variant additionally falls
back to the previous step's crossing order, which the stored safe signal
keeps feasible.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .dynamics import (
    InputSignal,
    StateInterval,
    VehicleParams,
    integrate_extremal,
    predict_step,
)
from .efficient import approx_verify
from .errors import BlockedStateError, InfeasibleInitialCondition, ScheduleContractError
from .exact import Schedule, exact_verify, schedule_for_sequence
from .scheduling import SchedulingInstance, THETA_SAMPLES, bad_set_overlap

__all__ = [
    "SupervisorConfig",
    "SupervisorSession",
    "StepDecision",
    "bad_set_overlap",
    "desired_safe_over_step",
    "safe_input_generator",
    "initialize_session",
    "supervisor_step",
]


@dataclass(frozen=True)
class SupervisorConfig:
    tau: float = 0.1
    step: Optional[float] = None  # integration step; default tau / 10
    theta_samples: int = THETA_SAMPLES
    permutation_cap: Optional[int] = None  # exact mode only

    @property
    def dt(self) -> float:
        return self.step if self.step is not None else self.tau / 10.0


@dataclass
class StepDecision:
    """Outcome of one supervisor step."""

    outputs: dict  # vid -> InputSignal on [0, tau) for controlled vehicles
    overridden: bool
    answer: bool  # verifier answer on the desired-input prediction
    fallback_used: bool
    schedule: Optional[Schedule]
    wall_time: float


@dataclass
class SupervisorSession:
    """Single-owner loop state: one step at a time, strictly ordered."""

    mode: str  # "exact" | "efficient"
    params: dict  # vid -> VehicleParams
    config: SupervisorConfig
    safe_recipes: Optional[dict] = None  # vid -> InputSignal on [0, inf), next step
    stored_sequence: tuple[int, ...] = ()
    last_prediction: Optional[dict] = None  # vid -> StateInterval
    k: int = 0

    @property
    def controlled_ids(self) -> tuple[int, ...]:
        return tuple(v for v, p in self.params.items() if p.controlled)


def desired_signals(session: SupervisorSession, desired: Mapping[int, float]) -> dict:
    return {vid: InputSignal.constant(desired[vid]) for vid in session.controlled_ids}


def predict_all(
    params: Mapping[int, VehicleParams],
    estimate: Mapping[int, StateInterval],
    signals: Mapping[int, InputSignal],
    tau: float,
    step: float,
) -> dict:
    """One-step-ahead interval prediction for every vehicle (uncontrolled
    vehicles use extremal driver inputs regardless of ``signals``)."""
    return {
        vid: predict_step(p, estimate[vid], signals.get(vid), tau, step)
        for vid, p in params.items()
    }


def desired_safe_over_step(
    params: Mapping[int, VehicleParams],
    estimate: Mapping[int, StateInterval],
    signals: Mapping[int, InputSignal],
    tau: float,
    step: float,
) -> bool:
    """Sample the interval evolution across [0, tau) at integration
    resolution and reject if any instant can touch the collision set."""
    if tau <= 0.0:
        return True
    vids = list(params)
    trajs = {}
    for vid in vids:
        p = params[vid]
        lo = integrate_extremal(p, estimate[vid].lo, signals.get(vid), "min", tau, step)
        hi = integrate_extremal(p, estimate[vid].hi, signals.get(vid), "max", tau, step)
        trajs[vid] = (lo, hi)
    alphas = [params[v].alpha for v in vids]
    betas = [params[v].beta for v in vids]
    ctrl = [params[v].controlled for v in vids]
    n_samples = len(trajs[vids[0]][0])
    for i in range(n_samples):
        ivals = [(trajs[v][0][i][1].y, trajs[v][1][i][1].y) for v in vids]
        if bad_set_overlap(ivals, alphas, betas, ctrl):
            return False
    return True


def safe_input_generator(
    instance: SchedulingInstance,
    schedule: Optional[Schedule],
) -> dict:
    """Map a feasible schedule on ``instance`` to per-vehicle input recipes.

    Scheduled vehicles get the bang-bang signal whose upper bound enters
    at the scheduled time (and whose lower bound exits within the
    schedule's process time); vehicles with a zero entry time get full
    throttle.  The recipes extend to the infinite horizon.
    """
    recipes = {}
    entries = schedule.entry_times if schedule is not None else {}
    for vid, p in instance.params.items():
        if not p.controlled:
            continue
        t = entries.get(vid, 0.0)
        if t <= 0.0:
            recipes[vid] = InputSignal.constant(p.u_max)
            continue
        job = instance.jobs[vid]
        if job.entered or job.exited:
            raise ScheduleContractError(
                f"vehicle {vid} has entered but was scheduled at {t}"
            )
        if t > job.deadline + 1e-6 or t < job.release - 1e-6:
            raise ScheduleContractError(
                f"entry {t} outside [{job.release}, {job.deadline}] for vehicle {vid}"
            )
        switch, _ = job.switch_for_entry(t)
        recipes[vid] = InputSignal.bang_bang(p.u_min, switch, p.u_max)
    return recipes


def _build_instance(session: SupervisorSession, prediction: Mapping[int, StateInterval]):
    return SchedulingInstance.build(session.params, dict(prediction), session.config.dt)


def _verify(session: SupervisorSession, instance: SchedulingInstance):
    if session.mode == "exact":
        return exact_verify(instance, session.config.permutation_cap)
    return approx_verify(instance, session.config.theta_samples)


def initialize_session(
    mode: str,
    params: Mapping[int, VehicleParams],
    estimate: Mapping[int, StateInterval],
    desired: Mapping[int, float],
    config: Optional[SupervisorConfig] = None,
) -> SupervisorSession:
    """Validate the initial configuration and seed the session.

    The first step must take the pass-through branch (there is no stored
    safe signal yet), so the desired-input prediction must verify and the
    first step itself must stay clear of the collision set.
    """
    if mode not in ("exact", "efficient"):
        raise ValueError(f"unknown mode {mode!r}")
    config = config or SupervisorConfig()
    session = SupervisorSession(mode=mode, params=dict(params), config=config)
    signals = desired_signals(session, desired)
    prediction = predict_all(session.params, estimate, signals, config.tau, config.dt)
    instance = _build_instance(session, prediction)
    schedule, answer = _verify(session, instance)
    if not answer:
        raise InfeasibleInitialCondition("verifier rejected the initial prediction")
    if not desired_safe_over_step(session.params, estimate, signals, config.tau, config.dt):
        raise InfeasibleInitialCondition("initial desired input crosses the collision set")
    session.safe_recipes = safe_input_generator(instance, schedule)
    session.stored_sequence = schedule.sequence if schedule is not None else ()
    session.last_prediction = prediction
    return session


def supervisor_step(
    session: SupervisorSession,
    estimate: Mapping[int, StateInterval],
    desired: Mapping[int, float],
) -> StepDecision:
    """One supervisor invocation at the current step.

    The estimate must already be corrected against the previous
    prediction; the session's stored safe signal is consumed when an
    override fires, and a fresh one is stored in all cases.
    """
    t0 = time.perf_counter()
    cfg = session.config
    signals = desired_signals(session, desired)
    prediction = predict_all(session.params, estimate, signals, cfg.tau, cfg.dt)
    instance = _build_instance(session, prediction)
    schedule, answer = _verify(session, instance)
    fallback_used = False
    if answer and desired_safe_over_step(session.params, estimate, signals, cfg.tau, cfg.dt):
        overridden = False
        outputs = signals
        next_recipes = safe_input_generator(instance, schedule)
        used_schedule = schedule
        used_prediction = prediction
    else:
        overridden = True
        if session.safe_recipes is None:
            raise BlockedStateError(f"no stored safe signal at step {session.k}")
        outputs = dict(session.safe_recipes)
        safe_prediction = predict_all(session.params, estimate, outputs, cfg.tau, cfg.dt)
        safe_instance = _build_instance(session, safe_prediction)
        schedule2, answer2 = _verify(session, safe_instance)
        if not answer2:
            if session.mode == "exact":
                # guaranteed impossible from a feasible start; assert it
                raise BlockedStateError(
                    f"safe-signal prediction lost feasibility at step {session.k}"
                )
            fallback_used = True
            pi0 = _extend_sequence(session.stored_sequence, safe_instance)
            schedule2, answer3 = schedule_for_sequence(pi0, safe_instance)
            if not answer3:
                raise BlockedStateError(
                    f"stored sequence {pi0} infeasible at step {session.k}"
                )
        next_recipes = safe_input_generator(safe_instance, schedule2)
        used_schedule = schedule2
        used_prediction = safe_prediction
    session.safe_recipes = next_recipes
    session.stored_sequence = (
        used_schedule.sequence if used_schedule is not None else ()
    )
    session.last_prediction = used_prediction
    session.k += 1
    return StepDecision(
        outputs=outputs,
        overridden=overridden,
        answer=answer,
        fallback_used=fallback_used,
        schedule=used_schedule,
        wall_time=time.perf_counter() - t0,
    )


def _extend_sequence(
    stored: Sequence[int], instance: SchedulingInstance
) -> tuple[int, ...]:
    """The stored order, with any pending vehicle it does not cover
    prepended.  Such a vehicle was previously counted as entered and its
    occupancy was scheduled first, so first is where it stays; this only
    happens when a measurement pulls an upper position bound back below
    the entry point."""
    missing = sorted(set(instance.pending).difference(stored))
    return tuple(missing) + tuple(stored)
